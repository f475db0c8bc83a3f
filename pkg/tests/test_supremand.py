import random
from fractions import Fraction
from itertools import combinations

import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from cartconv.fixtures import fixture, m_triangle
from cartconv.geometry import LINF, NormKind, Region, as_point, box, contains, convex_hull, inflate, intersect
from cartconv.hull import is_cartesian_convex
from cartconv.rational import to_q
from cartconv.squares import SquareUnion
from cartconv.supremand import (
    DEFAULT_EPS,
    Supremand,
    bisect_level,
    check_jensen,
    envelope_lower_bound,
    eval_envelope,
    eval_envelope_search,
    eval_W,
    eval_W4,
    eval_W4_search,
    eval_W_hat,
    is_cartesian_level_convex,
    jensen_samples,
    level_member,
    sublevel,
    w4_closed_form,
)

EPS = DEFAULT_EPS
S1 = Supremand.from_union(fixture("G1"))
S2 = Supremand.from_union(fixture("G2"))
S3 = Supremand.from_union(fixture("G3"))
G3_POINTS = [as_point(p) for p in [(1, 2), ("-1/2", -1), (-1, 2), ("1/2", -1), ("3/2", 1), ("-3/2", 1)]]


def linf(a, b):
    return max(abs(Fraction(str(x)) - Fraction(str(y))) for x, y in zip(a, b))


def brute_W_g3(xi, zeta):
    """G3 wells are point pairs; the distance is a min over two points."""
    pairs = [G3_POINTS[0:2], G3_POINTS[2:4], G3_POINTS[4:6]]
    return min(max(min(linf(xi, p) for p in w), min(linf(zeta, p) for p in w)) for w in pairs)


coord = st.fractions(min_value=-3, max_value=3, max_denominator=8)
pt = st.tuples(coord, coord).map(as_point)


# ---------------------------------------------------------------- W


def test_W_zero_inside_one_well():
    assert eval_W(S1, as_point((1, 2)), as_point(("1/4", "1/2"))) == 0


def test_W_g3_distinct_wells_brute_force():
    xi, zeta = as_point((1, 2)), as_point((-1, 2))
    # the third well is at max-distance 1 from both points
    assert eval_W(S3, xi, zeta) == brute_W_g3(xi, zeta) == 1


@given(pt, pt)
def test_W_g3_matches_brute_force(xi, zeta):
    assert eval_W(S3, xi, zeta) == brute_W_g3(xi, zeta)


@given(pt)
def test_W_diagonal_is_nearest_well(x):
    assert eval_W(S3, x, x) == min(min(linf(x, p) for p in G3_POINTS[2 * i:2 * i + 2]) for i in range(3))


@given(pt, pt)
def test_W_symmetric_and_diagonal(xi, zeta):
    assert eval_W(S1, xi, zeta) == eval_W(S1, zeta, xi)
    assert eval_W_hat(lambda a, b: eval_W(S1, a, b), xi, zeta) == eval_W(S1, xi, zeta)


def test_W_hat_examples():
    f = lambda a, b: abs(a - b)  # noqa: E731
    assert eval_W_hat(f, 3, 1) == 2
    assert eval_W_hat(lambda a, b: a - b, 1, 0) == 1


@given(pt, pt, pt)
def test_W_is_one_lipschitz_per_argument(xi, zeta, eta):
    assert abs(eval_W(S1, xi, zeta) - eval_W(S1, eta, zeta)) <= linf(xi, eta)


def test_power_applied_once():
    Sq = Supremand.from_union(fixture("G3"), q=2)
    xi, zeta = as_point((0, "-1/4")), as_point((0, "1/2"))
    assert eval_W(S3, xi, zeta) == mpq(3, 2)
    assert eval_W(Sq, xi, zeta) == mpq(9, 4)


# ---------------------------------------------------------------- sublevel


def test_sublevel_zero_is_identity():
    assert sublevel(S3, 0).atoms == fixture("G3").atoms


def test_sublevel_point_unit_square():
    S = Supremand.from_atoms([convex_hull([as_point((0, 0))])])
    assert sublevel(S, 1).atoms[0] == Region.single(box((-1, -1), (1, 1)))


def test_sublevel_g3_large_c_has_pairwise_overlaps():
    L = sublevel(S3, mpq(1, 1))
    overlaps = [intersect(p, q) for (A, B) in combinations(L.atoms, 2) for p in A.pieces for q in B.pieces]
    assert sum(o is not None for o in overlaps) >= 3


# ---------------------------------------------------------------- envelope


def test_envelope_zero_on_K():
    assert eval_envelope(S1, as_point((1, 2)), as_point((0, 0))) == 0


def test_envelope_g3_triangle_interior_drops_to_zero():
    # the hull of the zero level already holds the triangle squared
    xi, zeta = as_point((0, "1/2")), as_point(("1/8", "3/4"))
    assert contains(m_triangle(), xi) and contains(m_triangle(), zeta)
    assert eval_envelope(S3, xi, zeta) == 0 < eval_W(S3, xi, zeta)


def test_envelope_g3_near_triangle_strictly_between():
    xi, zeta = as_point((0, "-1/4")), as_point((0, "1/2"))
    assert not contains(m_triangle(), xi)
    env = eval_envelope(S3, xi, zeta)
    assert 0 < env < eval_W(S3, xi, zeta)
    assert abs(env - mpq(1, 12)) <= EPS


def _conv_m_level_member(S, xi, zeta, c):
    """Independent oracle: both points in conv of the pairwise overlaps of the inflated wells."""
    infl = [[inflate(p, c, S.norm) for p in A.pieces] for A in S.atoms]
    verts = []
    for a, b in combinations(infl, 2):
        for p in a:
            for q in b:
                X = intersect(p, q)
                if X is not None:
                    verts.extend(X.vertices)
    if not verts:
        return False
    H = convex_hull(verts)
    return contains(H, xi) and contains(H, zeta)


def _four_well_oracle(S, xi, zeta):
    well = min(max(_hull_dist(S, i, xi), _hull_dist(S, i, zeta)) for i in range(S.n))
    lo, hi = mpq(0), to_q(well)
    if not _conv_m_level_member(S, xi, zeta, hi):
        return well
    while hi - lo > mpq(1, 10 ** 5):
        mid = (lo + hi) / 2
        if _conv_m_level_member(S, xi, zeta, mid):
            hi = mid
        else:
            lo = mid
    return hi


def _hull_dist(S, i, x):
    from cartconv.geometry import distance

    return distance(x, Region.single(convex_hull(S.atoms[i].vertices())), S.norm)


def test_envelope_g2_matches_four_well_minimum():
    rng = random.Random(4)
    for _ in range(12):
        xi = as_point((Fraction(rng.randint(-12, 12), 8), Fraction(rng.randint(-8, 16), 8)))
        zeta = as_point((Fraction(rng.randint(-12, 12), 8), Fraction(rng.randint(-8, 16), 8)))
        env = eval_envelope(S2, xi, zeta)
        assert abs(float(env) - float(_four_well_oracle(S2, xi, zeta))) <= 2e-5


@given(pt, pt)
def test_envelope_bounds_and_level_identity(xi, zeta):
    r = eval_envelope_search(S3, xi, zeta)
    W = eval_W(S3, xi, zeta)
    assert envelope_lower_bound(S3, xi, zeta) <= r.value <= W
    assert r.hi - r.lo <= EPS
    assert level_member(S3, xi, zeta, r.hi)
    if r.lo < r.hi:
        assert not level_member(S3, xi, zeta, r.lo)


@given(pt, pt, st.fractions(0, 2, max_denominator=16), st.fractions(0, 2, max_denominator=16))
def test_level_membership_nested(xi, zeta, c1, c2):
    c1, c2 = sorted((to_q(c1), to_q(c2)))
    if level_member(S1, xi, zeta, c1):
        assert level_member(S1, xi, zeta, c2)


@given(pt, pt)
def test_envelope_symmetric(xi, zeta):
    a, b = eval_envelope(S1, xi, zeta), eval_envelope(S1, zeta, xi)
    assert abs(a - b) <= EPS


@given(pt, pt, pt)
def test_envelope_lipschitz(xi, zeta, eta):
    d = linf(xi, eta)
    a, b = eval_envelope(S3, xi, zeta), eval_envelope(S3, eta, zeta)
    assert abs(Fraction(str(a)) - Fraction(str(b))) <= d + 2 * Fraction(1, 10 ** 6)


def test_envelope_l2_mode_brackets_euclidean_distance():
    S = Supremand.from_atoms([convex_hull([as_point((0, 0))])], norm=NormKind("l2", 16))
    xi = as_point((3, 4))
    v = float(eval_envelope(S, xi, xi))
    assert 5 * 0.98 <= v <= 5 * 1.0001


# ---------------------------------------------------------------- W4


def test_w4_zero_at_overlap_point():
    assert eval_W4(S1, as_point((0, 0)), as_point((0, 0))) == 0


def test_w4_g3_positive_and_infeasible_below_cap():
    xi = as_point((0, 0))
    v = eval_W4(S3, xi, xi)
    assert v > 0
    r = eval_W4_search(S3, xi, xi, cap=mpq(1, 100))
    assert r.status == "infeasible-below-cap" and eval_W4(S3, xi, xi, cap=mpq(1, 100)) is None


@given(pt, pt)
def test_w4_matches_closed_form(xi, zeta):
    v = eval_W4(S3, xi, zeta)
    assert abs(v - w4_closed_form(S3, xi, zeta)) <= EPS


def test_w4_far_points_above_overlap_distance():
    xi, zeta = as_point((5, 5)), as_point((-5, -5))
    assert eval_W4(S1, xi, zeta) >= w4_closed_form(S1, xi, zeta) - EPS


def test_w4_requires_two_wells():
    with pytest.raises(ValueError):
        eval_W4(Supremand.from_atoms([convex_hull([as_point((0, 0))])]), as_point((0, 0)), as_point((0, 0)))


# ---------------------------------------------------------------- Jensen and level convexity


def test_jensen_constant_has_no_violation():
    samples = jensen_samples(random.Random(0), G3_POINTS, 30)
    assert check_jensen(lambda a, b: 7, samples) == []


def test_jensen_W_g3_violated():
    samples = jensen_samples(random.Random(1), G3_POINTS, 60)
    assert len(check_jensen(lambda a, b: eval_W(S3, a, b), samples)) >= 1


def test_jensen_envelope_g3_clean():
    samples = jensen_samples(random.Random(1), G3_POINTS, 25)
    assert check_jensen(lambda a, b: eval_envelope(S3, a, b), samples, tol=2e-6) == []


def test_level_convexity_examples():
    single = Supremand.from_atoms([box((0, 0), (1, 1))])
    assert is_cartesian_level_convex(single, [0, "1/2", 1]).convex
    res = is_cartesian_level_convex(S1, [0])
    assert not res.convex and res.level == 0
    res2 = is_cartesian_level_convex(S2, [0])
    assert res2.convex == is_cartesian_convex(sublevel(S2, 0))


def test_bisect_level_brackets_threshold():
    r = bisect_level(lambda c: c >= mpq(1, 3), 0, 1, mpq(1, 1000))
    assert r.lo < mpq(1, 3) <= r.hi and r.hi - r.lo <= mpq(1, 1000)


def test_supremand_pickles_with_cache():
    import pickle

    eval_envelope(S3, as_point((0, "1/2")), as_point(("1/8", "3/4")))
    T = pickle.loads(pickle.dumps(S3))
    assert eval_W(T, as_point((1, 2)), as_point((-1, 2))) == 1
    assert SquareUnion.build(T.atoms).n == 3
