"""Nonlocal supremal functionals on simple functions.

For a piecewise-constant u only the value list matters: J_W(u) is a finite
max over value pairs, and the relaxation is the least level c at which all
values fit in the convex hull of one maximal square of L_c(W).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, Sequence

from gmpy2 import mpq

from .geometry import Point, Region, as_point, contains, convex_hull, distance, hull_of_region
from .hull import BasicCertificate, has_basic_convexification
from .rational import to_q
from .squares import SquareUnion, maximal_squares, point_pattern
from .supremand import (
    DEFAULT_EPS,
    LevelSearch,
    Supremand,
    _inflate_region,
    _q_of,
    bisect_level,
    eval_envelope,
    eval_W,
    eval_W_raw,
    sublevel,
)


@dataclass(frozen=True)
class SimpleFunction:
    """Piecewise-constant u on a unit-measure domain: (weight, value) cells."""

    dim: int
    cells: tuple

    @classmethod
    def make(cls, values: Iterable, weights: Optional[Iterable] = None) -> "SimpleFunction":
        vals = [as_point(v) for v in values]
        if not vals:
            raise ValueError("a simple function needs at least one cell")
        if weights is None:
            ws = [mpq(1, len(vals))] * len(vals)
        else:
            ws = [to_q(w) for w in weights]
        if len(ws) != len(vals):
            raise ValueError("weights and values differ in length")
        if any(w <= 0 for w in ws):
            raise ValueError("cell weights must be positive")
        if sum(ws) != 1:
            raise ValueError("cell weights must sum to 1")
        dim = len(vals[0])
        if any(len(v) != dim for v in vals):
            raise ValueError("values of mixed dimension")
        return cls(dim, tuple(zip(ws, vals)))

    @property
    def values(self) -> list:
        return [v for _, v in self.cells]

    @property
    def weights(self) -> list:
        return [w for w, _ in self.cells]

    def distinct_values(self) -> list:
        return sorted(set(self.values))

    def mean(self) -> Point:
        return tuple(sum(w * v[d] for w, v in self.cells) for d in range(self.dim))


def eval_J(S: Supremand, u: SimpleFunction):
    """Max of W over all ordered value pairs, diagonal included."""
    vals = u.distinct_values()
    return max(eval_W(S, a, b) for a in vals for b in vals)


def eval_J_raw(S: Supremand, u: SimpleFunction):
    vals = u.distinct_values()
    return max(eval_W_raw(S, a, b) for a in vals for b in vals)


def max_pair_envelope(S: Supremand, u: SimpleFunction, eps=DEFAULT_EPS):
    """J of the level-convex envelope: max of W^lc over unordered value pairs."""
    vals = u.distinct_values()
    best = None
    for i, a in enumerate(vals):
        for b in vals[i:]:
            v = eval_envelope(S, a, b, eps)
            best = v if best is None or v > best else best
    return best


# ---------------------------------------------------------------- inclusions


def membership_A(K: SquareUnion, u: SimpleFunction) -> bool:
    """All ordered value pairs in K."""
    pats = [set(point_pattern(K, v)) for v in u.distinct_values()]
    if not all(pats):
        return False
    return all(a & b for a, b in combinations(pats, 2))


def membership_A_by_squares(K: SquareUnion, u: SimpleFunction) -> bool:
    """Same question answered through a single maximal square holding every value."""
    vals = u.distinct_values()
    return any(all(_region_has(B, v) for v in vals) for B in maximal_squares(K).squares)


def _region_has(B: Region, x: Point) -> bool:
    return any(contains(p, x) for p in B.pieces)


def membership_A_infty(K: SquareUnion, u: SimpleFunction, limit: int = 16) -> bool:
    """All values inside the convex hull of one maximal square of K."""
    vals = u.distinct_values()
    for B in maximal_squares(K, limit=limit).squares:
        H = hull_of_region(B)
        if all(contains(H, v) for v in vals):
            return True
    return False


# ---------------------------------------------------------------- relaxation


def _level_square_hulls(S: Supremand, c) -> tuple:
    c = to_q(c)

    def compute():
        ms = maximal_squares(sublevel(S, c), limit=S.limit, verify=False)
        return tuple(hull_of_region(B) for B in ms.squares)

    return S._cache.get(("square-hulls", c), compute)


def rlx_member(S: Supremand, u: SimpleFunction, c) -> bool:
    """u in A^infty of L_c(W)."""
    c = to_q(c)
    if c < 0:
        return False
    vals = u.distinct_values()
    return any(all(contains(H, v) for v in vals) for H in _level_square_hulls(S, c))


def _hull_terms(S: Supremand, vals: Sequence[Point]) -> list:
    out = []
    for a in S.atoms:
        H = Region.single(hull_of_region(a))
        out.append(max(distance(v, H, S.norm) for v in vals))
    return out


def eval_J_rlx_search(S: Supremand, u: SimpleFunction, eps=DEFAULT_EPS) -> LevelSearch:
    vals = u.distinct_values()
    hi = min(eval_J_raw(S, u), min(_hull_terms(S, vals)))
    if hi == 0:
        return LevelSearch(_q_of(0), _q_of(0), _q_of(0), 0)
    if not S.norm.exact:
        hi = hi * (1 + 1e-12) + 1e-12
    K = Region.single(S.union_hull())
    lo = max(distance(v, K, S.norm) for v in vals)
    if not S.norm.exact:
        import math

        lo *= math.cos(math.pi / S.norm.k)
    lo, hi, eps = _q_of(lo), _q_of(hi), _q_of(eps)
    pred = lambda c: rlx_member(S, u, c)  # noqa: E731
    if hi - eps > lo and not pred(hi - eps):
        return LevelSearch(hi, hi - eps, hi, 1)
    r = bisect_level(pred, lo, hi, eps)
    return LevelSearch(r.value, r.lo, r.hi, r.probes + 1)


def eval_J_rlx(S: Supremand, u: SimpleFunction, eps=DEFAULT_EPS):
    """Relaxed functional J_W^rlx(u) within eps (power q applied)."""
    return S.power(eval_J_rlx_search(S, u, eps).value)


def _m_hull(S: Supremand, c):
    """Convex hull of M^c (None when no two inflated wells meet)."""
    from .geometry import intersect_regions

    infl = [_inflate_region(a, c, S.norm) for a in S.atoms]
    verts = []
    for i, j in combinations(range(len(infl)), 2):
        X = intersect_regions(infl[i], infl[j])
        if X is not None:
            verts.extend(X.vertices())
    return convex_hull(verts) if verts else None


@dataclass(frozen=True)
class MinFormula:
    value: object
    terms: tuple  # N hull-distance terms followed by the conv(M^c) term


def eval_J_rlx_minformula(S: Supremand, u: SimpleFunction, eps=DEFAULT_EPS) -> MinFormula:
    """Three-well min formula: hull distances of each well and the conv(M^c) level."""
    if S.n != 3:
        raise ValueError("the min formula is stated for three wells")
    vals = u.distinct_values()
    terms = _hull_terms(S, vals)

    def second(v):
        return sorted(distance(v, a, S.norm) for a in S.atoms)[1]

    hi = max(second(v) for v in vals)
    if not S.norm.exact:
        hi = hi * (1 + 1e-12) + 1e-12

    def pred(c) -> bool:
        H = _m_hull(S, c)
        return H is not None and all(contains(H, v) for v in vals)

    t4 = bisect_level(pred, 0, hi, eps).value
    terms = [_q_of(t) for t in terms] + [t4]
    return MinFormula(S.power(min(terms)), tuple(terms))


# ---------------------------------------------------------------- structure


@dataclass
class StructureReport:
    levels: list
    verdicts: list  # per level: True/False
    verdict: str
    witness_level: Optional[mpq] = None
    witness: Optional[Region] = None
    certificates: list = field(default_factory=list, repr=False)


def default_levels(S: Supremand) -> list:
    return [mpq(0), mpq(1, 16), mpq(1, 8), mpq(1, 4), mpq(1, 2), mpq(1)]


def structure_report(S: Supremand, levels: Optional[Sequence] = None) -> StructureReport:
    """Basic-convexification verdict over a ladder of raw levels."""
    levels = [to_q(c) for c in (levels if levels is not None else default_levels(S))]
    verdicts, certs = [], []
    for c in levels:
        cert: BasicCertificate = has_basic_convexification(sublevel(S, c), limit=S.limit)
        certs.append(cert)
        verdicts.append(cert.basic)
        if not cert.basic:
            return StructureReport(levels, verdicts, "not-preserved", c, cert.witness, certs)
    if not levels:
        return StructureReport(levels, verdicts, "inconclusive", certificates=certs)
    return StructureReport(levels, verdicts, "preserved (at probed levels)", certificates=certs)
