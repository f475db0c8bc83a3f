"""Fixture self-test: structural checks on the named scenes, one table row each."""
from __future__ import annotations

import time
from typing import Callable, TextIO

from gmpy2 import mpq

from .fixtures import EXPECTED_COUNTS, fixture, g1, g2, g3, m_points, m_triangle
from .functional import SimpleFunction, eval_J_rlx, eval_J_rlx_minformula
from .geometry import Region, region_equal
from .hull import cartesian_hull, has_basic_convexification, is_cartesian_convex, set_equal
from .squares import SquareUnion, maximal_squares
from .supremand import Supremand


def _g1_squares():
    ms = maximal_squares(g1())
    hidden = [B for B, h in zip(ms.squares, ms.hidden) if h]
    ok = len(ms) == 4 and len(hidden) == 1 and hidden[0] == m_points()
    return ok, f"{len(ms)} squares, {len(hidden)} hidden"


def _g1_hull():
    E = g1()
    tr = cartesian_hull(E)
    target = SquareUnion.build(list(E.atoms) + [m_triangle()])
    ok = tr.fixpoint_reached and tr.iterations == 1 and set_equal(tr.last, target)
    return ok, f"{tr.iterations} productive step(s)"


def _g3_hull():
    tr = cartesian_hull(g3())
    ok = (tr.fixpoint_reached and tr.iterations == 2
          and not is_cartesian_convex(tr.stages[1]) and is_cartesian_convex(tr.stages[2])
          and any(region_equal(a, Region.single(m_triangle())) for a in tr.stages[2].atoms))
    return ok, f"{tr.iterations} productive step(s)"


def _check_basic():
    c2, c3 = has_basic_convexification(g2()), has_basic_convexification(g3())
    ok = c2.basic and not c3.basic and c3.witness == m_points()
    return ok, f"G2 {c2.basic}, G3 {c3.basic}"


def _relax_g3():
    S = Supremand.from_union(g3())
    u = SimpleFunction.make([(0, 0), ("1/2", 1), ("-1/2", 1)])
    a, b = eval_J_rlx(S, u), eval_J_rlx_minformula(S, u).value
    ok = abs(a - mpq(1, 2)) <= mpq(2, 10 ** 6) and abs(a - b) <= mpq(2, 10 ** 6)
    return ok, f"J_rlx {float(a):.6f}, min formula {float(b):.6f}"


def _counts(name: str) -> Callable:
    def run():
        ms = maximal_squares(fixture(name))
        exp = EXPECTED_COUNTS[name]
        return (len(ms), ms.hidden_count) == exp, f"{len(ms)} squares, {ms.hidden_count} hidden (expect {exp[0]}/{exp[1]})"
    return run


CHECKS = [
    ("G1 maximal squares", _g1_squares, False),
    ("G1 hull fixpoint", _g1_hull, False),
    ("G3 hull two steps", _g3_hull, False),
    ("check-basic G2/G3", _check_basic, False),
    ("G3 relaxation corners", _relax_g3, False),
    ("G2L counts", _counts("G2L"), True),
    ("G2M counts", _counts("G2M"), True),
    ("G2R counts", _counts("G2R"), True),
]


def run_selftest(out: TextIO) -> int:
    failed_blocking = 0
    out.write(f"{'check':<26} {'result':<6} {'time':>7}  detail\n")
    for name, fn, stretch in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure row, not an abort
            ok, detail = False, f"error: {exc}"
        dt = time.perf_counter() - t0
        tag = "PASS" if ok else ("WARN" if stretch else "FAIL")
        if not ok and not stretch:
            failed_blocking += 1
        out.write(f"{name:<26} {tag:<6} {dt:6.2f}s  {detail}\n")
    return 0 if failed_blocking == 0 else 3
