"""Acceptance criteria 1-11, each checked at its stated tolerance and time budget.

Every test records one PASS/FAIL line (with wall time) that the conftest hook
prints as a table at the end of the run.
"""
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
from gmpy2 import mpq

from cartconv.fixtures import fixture, m_points, m_triangle
from cartconv.functional import (
    SimpleFunction,
    eval_J,
    eval_J_rlx,
    eval_J_rlx_minformula,
    max_pair_envelope,
)
from cartconv.geometry import Region, as_point, region_equal
from cartconv.hull import cartesian_hull, has_basic_convexification, is_cartesian_convex, separate_hull_1d, set_equal
from cartconv.lp_approx import (
    LpProblem,
    default_ladder,
    eval_Ip,
    gamma_sweep,
    ip_monotone_exact,
)
from cartconv.squares import (
    SquareUnion,
    _patterns_cached,
    grid_consistency,
    hidden_union_M,
    maximal_squares,
)
from cartconv.supremand import (
    DEFAULT_EPS,
    Supremand,
    check_jensen,
    eval_envelope_search,
    eval_W,
    jensen_samples,
    level_member,
)
from scenes import rand_disjoint_scene, rand_interval_scene, rand_line_scene, rand_scene

RESULTS: list = []


@contextmanager
def criterion(num: int, label: str, budget: float):
    """Record PASS/FAIL and wall time; a blown time budget is a failure too."""
    _patterns_cached.cache_clear()
    t0 = time.perf_counter()
    status, detail = "FAIL", ""
    try:
        yield
        status = "PASS"
    except AssertionError as exc:
        detail = str(exc).splitlines()[0] if str(exc) else "assertion failed"
        raise
    finally:
        dt = time.perf_counter() - t0
        if status == "PASS" and dt > budget:
            status, detail = "FAIL", f"over budget {budget:g}s"
        RESULTS.append((num, label, status, dt, budget, detail))
        print(f"criterion {num:>2} {status} {dt:8.2f}s / {budget:g}s  {label} {detail}")
    assert dt <= budget, f"criterion {num} took {dt:.2f}s, budget {budget:g}s"


def test_c01_g1_squares():
    with criterion(1, "G1 maximal squares {A1,A2,A3,M}, M hidden", 1.0):
        E = fixture("G1")
        ms = maximal_squares(E)
        expected = set(E.atoms) | {m_points()}
        assert set(ms.squares) == expected and len(ms) == 4
        assert [B for B, h in zip(ms.squares, ms.hidden) if h] == [m_points()]


def test_c02_g1_hull():
    with criterion(2, "G1 hull fixpoint after 1 step, union of Ai^2 and (M^co)^2", 2.0):
        E = fixture("G1")
        tr = cartesian_hull(E)
        assert tr.fixpoint_reached and tr.iterations == 1
        target = SquareUnion.build(list(E.atoms) + [Region.single(m_triangle())])
        assert set_equal(tr.last, target)


def test_c03_g3_hull():
    with criterion(3, "G3 hull needs 2 steps, stage 2 adds (M^co)^2", 2.0):
        tr = cartesian_hull(fixture("G3"))
        assert tr.fixpoint_reached and tr.iterations == 2
        assert not is_cartesian_convex(tr.stages[1])
        assert is_cartesian_convex(tr.stages[2])
        added = [A for A in tr.stages[2].atoms if A not in tr.stages[1].atoms]
        assert added == [Region.single(m_triangle())]


def test_c04_check_basic():
    with criterion(4, "check-basic true on G2, false on G3 with witness M", 4.0):
        t0 = time.perf_counter()
        assert has_basic_convexification(fixture("G2")).basic
        t1 = time.perf_counter()
        cert = has_basic_convexification(fixture("G3"))
        t2 = time.perf_counter()
        assert not cert.basic and cert.witness == m_points()
        assert t1 - t0 < 2 and t2 - t1 < 2


def test_c05_conclusion_suite():
    with criterion(5, "600 scenes: disjoint atoms, N=2 no hidden, N=3 at most one hidden = M", 60.0):
        rng = random.Random(505)
        violations = 0
        for _ in range(200):
            E = rand_disjoint_scene(rng, rng.randint(1, 5))
            ms = maximal_squares(E)
            violations += set(ms.squares) != set(E.atoms) or ms.hidden_count != 0
        for _ in range(200):
            ms = maximal_squares(rand_scene(rng, 2))
            violations += ms.hidden_count != 0
        for k in range(200):
            E = rand_line_scene(rng) if k % 2 else rand_scene(rng, 3)
            ms = maximal_squares(E)
            hidden = [B for B, h in zip(ms.squares, ms.hidden) if h]
            violations += len(hidden) > 1
            violations += any(not region_equal(B, hidden_union_M(E)) for B in hidden)
        assert violations == 0, f"{violations} violations"


def test_c06_grid_oracle():
    with criterion(6, "grid-clique oracle consistent at g=4,8,16 on 50 scenes", 120.0):
        rng = random.Random(606)
        bad = 0
        for _ in range(50):
            E = rand_scene(rng, rng.randint(2, 4))
            ms = maximal_squares(E)
            for g in (4, 8, 16):
                bad += len(grid_consistency(E, ms, g))
        assert bad == 0, f"{bad} inconsistent cliques"


def test_c07_scalar_oracle():
    with criterion(7, "m=1 hull equals separate hull, at most 1 step, 200 scenes", 30.0):
        rng = random.Random(707)
        for _ in range(200):
            E = rand_interval_scene(rng, rng.randint(1, 5))
            tr = cartesian_hull(E)
            assert tr.fixpoint_reached and tr.iterations <= 1
            assert set_equal(tr.last, separate_hull_1d(E))


G3_ANCHORS = [as_point(p) for p in [(1, 2), ("-1/2", -1), (-1, 2), ("1/2", -1), ("3/2", 1), ("-3/2", 1),
                                    ("1/2", 1), ("-1/2", 1), (0, 0)]]


def test_c08_envelope_laws():
    with criterion(8, "envelope bounds, level identity within 1e-6, Jensen split", 300.0):
        rng = random.Random(808)
        sups = [Supremand.from_union(fixture(n)) for n in ("G1", "G2", "G3")]
        for k in range(500):
            S = sups[k % 3]
            xi = as_point((Fraction(rng.randint(-32, 32), 16), Fraction(rng.randint(-24, 40), 16)))
            zeta = as_point((Fraction(rng.randint(-32, 32), 16), Fraction(rng.randint(-24, 40), 16)))
            r = eval_envelope_search(S, xi, zeta)
            assert 0 <= r.value <= eval_W(S, xi, zeta)
            assert r.hi - r.lo <= DEFAULT_EPS
            # the membership threshold lies in [lo, hi], so it is within 1e-6 of the returned value
            assert level_member(S, xi, zeta, r.hi)
            assert r.lo == r.hi or not level_member(S, xi, zeta, r.lo)
        for S in sups:
            samples = jensen_samples(random.Random(81), G3_ANCHORS, 12)
            assert check_jensen(lambda a, b: eval_envelope_search(S, a, b).value, samples, tol=2e-6) == []
        S3 = sups[2]
        samples = jensen_samples(random.Random(82), G3_ANCHORS, 60)
        assert len(check_jensen(lambda a, b: eval_W(S3, a, b), samples)) >= 1


def _rand_u(rng):
    k = rng.randint(1, 4)
    vals = [(Fraction(rng.randint(-12, 12), 8), Fraction(rng.randint(-8, 16), 8)) for _ in range(k)]
    ws = [Fraction(rng.randint(1, 4)) for _ in range(k)]
    tot = sum(ws)
    return SimpleFunction.make(vals, [w / tot for w in ws])


def _g3_gap_witness(S):
    """Grid search over three-valued u on a 1/4 lattice for the largest relaxation gap."""
    lattice = [as_point((Fraction(i, 4), Fraction(j, 4))) for i in range(-4, 5) for j in range(-2, 7)]
    rng = random.Random(909)
    best = (0, None)
    for _ in range(150):
        u = SimpleFunction.make(rng.sample(lattice, 3))
        env = max_pair_envelope(S, u)
        if env >= eval_J(S, u):
            continue
        gap = eval_J_rlx(S, u) - env
        if gap > best[0]:
            best = (gap, u)
        if gap > mpq(1, 10):
            break
    return best


def test_c09_relaxation():
    with criterion(9, "J_rlx >= max-pair envelope, G2 equality, G3 gap > 0.05, min formula", 600.0):
        eps = DEFAULT_EPS
        rng = random.Random(909)
        S2, S3 = Supremand.from_union(fixture("G2")), Supremand.from_union(fixture("G3"))
        for S, equal in ((S2, True), (S3, False)):
            for _ in range(100):
                u = _rand_u(rng)
                rlx = eval_J_rlx(S, u)
                env = max_pair_envelope(S, u)
                assert rlx >= env - eps
                if equal:
                    assert abs(rlx - env) <= 2 * eps, f"G2 gap {float(rlx - env)}"
                assert abs(rlx - eval_J_rlx_minformula(S, u).value) <= 2 * eps
        gap, witness = _g3_gap_witness(S3)
        assert witness is not None and gap > mpq(1, 20), f"best G3 gap {float(gap)}"


def test_c10_lp_sweep():
    with criterion(10, "Lp: exact monotonicity, pointwise limit, box sweep within 5%, coercivity", 900.0):
        S3 = Supremand.from_union(fixture("G3"))
        rng = random.Random(1010)
        ladder = [1, 2, 4, 8, 16, 32, 64, 128]
        checked = 0
        for _ in range(100):
            u = SimpleFunction.make([(Fraction(rng.randint(-16, 16), 8), Fraction(rng.randint(-16, 16), 8))
                                     for _ in range(rng.randint(1, 16))])
            for p1, p2 in zip(ladder, ladder[1:]):
                assert ip_monotone_exact(S3, u, p1, p2)
            J = float(eval_J(S3, u))
            if J >= 0.1:
                assert abs(eval_Ip(S3, u, 128) - J) / J <= 0.10
                checked += 1
        assert checked > 0
        wells = Supremand.from_atoms([Region.from_points([(-1,)]), Region.from_points([(1,)])], q=2)
        P = LpProblem(wells, 16, (0.0,), default_ladder(2), ((-0.5,), (0.5,)))
        res = gamma_sweep(P)
        mins = [e["min_value"] for e in res.entries]
        assert res.entries[-1]["p"] == 128
        assert all(b >= a * (1 - 1e-12) for a, b in zip(mins, mins[1:]))
        assert abs(res.reference - mins[-1]) / res.reference <= 0.05
        assert res.coercivity_checked > 0  # gamma_sweep raises if any accepted iterate breaks the chain
        assert np.isfinite(mins).all()


def test_c11_figure_counts():
    with criterion(11, "G2L 8 squares (4 hidden); G2M 6/2 and G2R 4/0 non-blocking", 60.0):
        ms = maximal_squares(fixture("G2L"))
        assert (len(ms), ms.hidden_count) == (8, 4)
        for name, target in (("G2M", (6, 2)), ("G2R", (4, 0))):
            got = maximal_squares(fixture(name))
            if (len(got), got.hidden_count) != target:
                print(f"criterion 11 note: {name} gives {(len(got), got.hidden_count)}, target {target}")
