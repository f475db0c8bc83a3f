"""Exact rational scalars.

All geometric predicates run on ``gmpy2.mpq``.  Inputs may arrive as ints,
``Fraction``, decimal strings (``"-0.5"``), ratio strings (``"3/4"``) or
floats; floats are read through their shortest ``repr`` so that ``0.374``
becomes ``187/500`` rather than a 53-bit binary expansion.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Union

from gmpy2 import mpq

Q = mpq
MPQ_TYPE = type(mpq(0))

Scalar = Union[int, str, float, Fraction, "mpq"]


def to_q(x: Scalar) -> mpq:
    if isinstance(x, MPQ_TYPE):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, int):
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, float):
        if x != x or x in (float("inf"), float("-inf")):
            raise ValueError(f"non-finite scalar {x!r}")
        f = Fraction(repr(float(x)))  # float() drops numpy's repr wrapper
        return mpq(f.numerator, f.denominator)
    if isinstance(x, str):
        f = Fraction(x.strip())
        return mpq(f.numerator, f.denominator)
    # numpy scalars and anything else float-like
    try:
        return to_q(float(x))
    except (TypeError, ValueError) as exc:
        raise TypeError(f"cannot convert {x!r} to a rational") from exc


def fmt_q(x: mpq) -> str:
    """Canonical text form: ``"p"`` for integers, ``"p/q"`` otherwise."""
    x = to_q(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def to_fraction(x: mpq) -> Fraction:
    x = to_q(x)
    return Fraction(int(x.numerator), int(x.denominator))
