"""Random scene generators and independent oracles shared by the tests."""
from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

from gmpy2 import mpq

from cartconv.geometry import Region, convex_hull, segment
from cartconv.squares import SquareUnion


def rq(rng: random.Random, lo: int, hi: int, den: int = 4) -> mpq:
    return mpq(rng.randint(lo * den, hi * den), den)


def rand_point(rng, lo=-2, hi=2, den=4, m=2):
    return tuple(rq(rng, lo, hi, den) for _ in range(m))


def rand_atom(rng, den=4):
    kind = rng.choice(["segment", "segment", "triangle", "box", "point"])
    if kind == "point":
        return convex_hull([rand_point(rng, den=den)])
    if kind == "segment":
        a = rand_point(rng, den=den)
        b = rand_point(rng, den=den)
        while b == a:
            b = rand_point(rng, den=den)
        return segment(a, b)
    if kind == "box":
        a = rand_point(rng, den=den)
        w, h = mpq(rng.randint(1, 6), den), mpq(rng.randint(1, 6), den)
        return convex_hull([a, (a[0] + w, a[1]), (a[0], a[1] + h), (a[0] + w, a[1] + h)])
    return convex_hull([rand_point(rng, den=den) for _ in range(3)])


def rand_scene(rng, n_atoms, den=4) -> SquareUnion:
    while True:
        E = SquareUnion.build([rand_atom(rng, den) for _ in range(n_atoms)])
        if E.n == n_atoms:
            return E


def rand_line_scene(rng, n_lines=3) -> SquareUnion:
    """Long segments through the central square, so that they tend to cross pairwise."""
    segs = []
    while len(segs) < n_lines:
        a = (rq(rng, -2, 2), mpq(-2))
        b = (rq(rng, -2, 2), mpq(2))
        if rng.random() < 0.5:
            a, b = (a[1], a[0]), (b[1], b[0])
        s = segment(a, b)
        if s not in segs:
            segs.append(s)
    return SquareUnion.build(segs)


def rand_disjoint_scene(rng, n_atoms) -> SquareUnion:
    """Atoms confined to separate vertical strips."""
    atoms = []
    for k in range(n_atoms):
        x0 = 3 * k
        pts = [(mpq(x0) + rq(rng, 0, 2), rq(rng, -2, 2)) for _ in range(rng.randint(1, 3))]
        atoms.append(convex_hull(pts))
    return SquareUnion.build(atoms)


def rand_interval_scene(rng, n_atoms) -> SquareUnion:
    atoms = []
    for _ in range(n_atoms):
        pieces = []
        for _ in range(rng.randint(1, 3)):
            a = rq(rng, -3, 3)
            b = a + (mpq(rng.randint(0, 6), 4) if rng.random() < 0.7 else 0)
            pieces.append(convex_hull([(a,), (b,)]))
        atoms.append(Region.of(pieces))
    return SquareUnion.build(atoms)


# ---------------------------------------------------------------- oracles


def frac_point(p):
    return tuple(Fraction(int(c.numerator), int(c.denominator)) for c in p)


def cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def in_triangle(p, a, b, c):
    d1, d2, d3 = cross(a, b, p), cross(b, c, p), cross(c, a, p)
    neg = d1 < 0 or d2 < 0 or d3 < 0
    pos = d1 > 0 or d2 > 0 or d3 > 0
    return not (neg and pos)


def on_seg(p, a, b):
    return (cross(a, b, p) == 0 and min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def extreme_points_oracle(points):
    """Brute force: p is extreme iff no segment or triangle of other points contains it."""
    pts = sorted(set(frac_point(p) for p in points))
    out = []
    for p in pts:
        others = [q for q in pts if q != p]
        covered = any(on_seg(p, a, b) for a, b in combinations(others, 2))
        covered = covered or any(in_triangle(p, a, b, c) for a, b, c in combinations(others, 3)
                                 if cross(a, b, c) != 0)
        if not covered:
            out.append(p)
    return out


def line_intersection_oracle(a, b, c, d):
    """2x2 exact solve of a + t(b-a) = c + s(d-c)."""
    a, b, c, d = map(frac_point, (a, b, c, d))
    m11, m12 = b[0] - a[0], -(d[0] - c[0])
    m21, m22 = b[1] - a[1], -(d[1] - c[1])
    r1, r2 = c[0] - a[0], c[1] - a[1]
    det = m11 * m22 - m12 * m21
    t = (r1 * m22 - m12 * r2) / det
    return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))


def to_shapely(R):
    from shapely.geometry import LineString, Point, Polygon
    from shapely.ops import unary_union

    geoms = []
    for P in R.pieces:
        v = [(float(x), float(y)) for x, y in P.ccw]
        if len(v) == 1:
            geoms.append(Point(v[0]))
        elif len(v) == 2:
            geoms.append(LineString(v))
        else:
            geoms.append(Polygon(v))
    return unary_union(geoms)
