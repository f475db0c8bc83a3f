"""Exact low-dimensional convex geometry over rationals.

Polytopes are stored in V-representation with a canonical (sorted) vertex
list, so equal polytopes compare equal.  Full arithmetic is supported for
m in {1, 2}; for m >= 3 only point clouds are handled, with membership decided
by an exact rational linear program.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from gmpy2 import mpq

from .rational import to_q

Point = tuple  # tuple of mpq

ZERO = mpq(0)
ONE = mpq(1)
HALF = mpq(1, 2)


class DimensionError(ValueError):
    """Raised on mismatched or unsupported ambient dimensions."""


def as_point(coords: Iterable) -> Point:
    pt = tuple(to_q(c) for c in coords)
    if not pt:
        raise DimensionError("points need at least one coordinate")
    return pt


# ---------------------------------------------------------------- norms


@dataclass(frozen=True)
class NormKind:
    """Inner norm on R^m.  ``k`` is the polygon count for the l2 approximation."""

    kind: str = "linf"
    k: int = 0

    def __post_init__(self):
        if self.kind == "linf":
            if self.k != 0:
                raise ValueError("linf takes no polygon count")
        elif self.kind == "l2":
            if self.k < 8 or self.k % 2:
                raise ValueError("l2 needs an even polygon count k >= 8")
        else:
            raise ValueError(f"unknown norm {self.kind!r}")

    @property
    def exact(self) -> bool:
        return self.kind == "linf"

    def __str__(self) -> str:
        return "linf" if self.kind == "linf" else f"l2:{self.k}"

    @classmethod
    def parse(cls, text: str) -> "NormKind":
        text = text.strip().lower()
        if text == "linf":
            return cls("linf")
        if text.startswith("l2"):
            _, _, k = text.partition(":")
            return cls("l2", int(k) if k else 32)
        raise ValueError(f"cannot parse norm {text!r}")


LINF = NormKind("linf")


# ---------------------------------------------------------------- predicates


def orient(a: Point, b: Point, c: Point) -> mpq:
    """Twice the signed area of (a, b, c); positive for a left turn."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a: Point, b: Point, x: Point) -> bool:
    if orient(a, b, x) != 0:
        return False
    return (min(a[0], b[0]) <= x[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= x[1] <= max(a[1], b[1]))


def _hull2(pts: Sequence[Point]) -> list:
    """Monotone chain; returns strictly extreme points in counter-clockwise order."""
    pts = sorted(set(pts))
    if len(pts) <= 2:
        return pts
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and orient(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and orient(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


# ---------------------------------------------------------------- exact LP


def _simplex_min(c: list, A: list, b: list) -> Optional[mpq]:
    """min c.x  s.t.  A x = b, x >= 0, exact; returns None if infeasible.

    Two-phase tableau simplex with Bland's rule.  Problems here are tiny and
    always bounded below, so unboundedness is treated as an internal error.
    """
    rows = len(A)
    n = len(c)
    A = [list(r) for r in A]
    b = list(b)
    for i in range(rows):
        if b[i] < 0:
            A[i] = [-v for v in A[i]]
            b[i] = -b[i]
    # tableau columns: n originals, rows artificials, rhs
    width = n + rows
    T = [A[i] + [ONE if j == i else ZERO for j in range(rows)] + [b[i]] for i in range(rows)]
    basis = [n + i for i in range(rows)]

    def pivot(r: int, col: int) -> None:
        pv = T[r][col]
        T[r] = [v / pv for v in T[r]]
        for i in range(rows):
            if i != r and T[i][col] != 0:
                f = T[i][col]
                Ti, Tr = T[i], T[r]
                T[i] = [Ti[j] - f * Tr[j] for j in range(width + 1)]
        basis[r] = col

    def run(cost: list, allowed: int) -> None:
        while True:
            # reduced costs
            entering = -1
            for j in range(allowed):
                if j in basis:
                    continue
                rc = cost[j] - sum(cost[basis[i]] * T[i][j] for i in range(rows))
                if rc < 0:
                    entering = j
                    break
            if entering < 0:
                return
            best = None
            r_out = -1
            for i in range(rows):
                if T[i][entering] > 0:
                    ratio = T[i][width] / T[i][entering]
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[r_out]):
                        best, r_out = ratio, i
            if r_out < 0:
                raise ArithmeticError("unbounded linear program")
            pivot(r_out, entering)

    phase1 = [ZERO] * n + [ONE] * rows
    run(phase1, width)
    if sum(T[i][width] for i in range(rows) if basis[i] >= n) != 0:
        return None
    # drive remaining (zero-level) artificials out of the basis where possible
    for i in range(rows):
        if basis[i] >= n:
            for j in range(n):
                if T[i][j] != 0 and j not in basis:
                    pivot(i, j)
                    break
    cost = list(c) + [ZERO] * rows
    # forbid artificials from re-entering
    run(cost, n)
    return sum(cost[basis[i]] * T[i][width] for i in range(rows))


def _in_hull_lp(x: Point, pts: Sequence[Point]) -> bool:
    m = len(x)
    A = [[p[d] for p in pts] for d in range(m)] + [[ONE] * len(pts)]
    b = list(x) + [ONE]
    return _simplex_min([ZERO] * len(pts), A, b) is not None


def _linf_dist_lp(x: Point, pts: Sequence[Point]) -> mpq:
    """Exact linf distance from x to conv(pts) by linear programming."""
    m, k = len(x), len(pts)
    # variables: lambda (k), t, s_plus (m), s_minus (m)
    n = k + 1 + 2 * m
    A, b = [], []
    for d in range(m):
        row = [p[d] for p in pts] + [-ONE] + [ONE if j == d else ZERO for j in range(m)] + [ZERO] * m
        A.append(row)
        b.append(x[d])
        row = [-p[d] for p in pts] + [-ONE] + [ZERO] * m + [ONE if j == d else ZERO for j in range(m)]
        A.append(row)
        b.append(-x[d])
    A.append([ONE] * k + [ZERO] * (1 + 2 * m))
    b.append(ONE)
    c = [ZERO] * k + [ONE] + [ZERO] * (2 * m)
    val = _simplex_min(c, A, b)
    assert val is not None and len(c) == n
    return val


# ---------------------------------------------------------------- polytopes


@dataclass(frozen=True)
class Polytope:
    """Convex compact set given by its canonical sorted vertex list."""

    dim: int
    vertices: tuple
    ccw: tuple = field(default=(), compare=False, hash=False, repr=False)

    @property
    def affine_dim(self) -> int:
        n = len(self.vertices)
        if n == 1:
            return 0
        if self.dim == 1 or n == 2:
            return 1
        if self.dim == 2:
            return 2
        return _affine_rank(self.vertices)

    def is_point(self) -> bool:
        return len(self.vertices) == 1

    def edges(self) -> list:
        """Boundary edges for m = 2 (a segment is its own single edge)."""
        v = self.ccw
        if len(v) == 1:
            return []
        if len(v) == 2:
            return [(v[0], v[1])]
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def bbox(self) -> tuple:
        return (tuple(min(v[d] for v in self.vertices) for d in range(self.dim)),
                tuple(max(v[d] for v in self.vertices) for d in range(self.dim)))

    def __repr__(self) -> str:
        from .rational import fmt_q
        vs = ", ".join("(" + ",".join(fmt_q(c) for c in v) + ")" for v in self.vertices)
        return f"Polytope[{vs}]"


def _affine_rank(pts: Sequence[Point]) -> int:
    base = pts[0]
    rows = [[p[d] - base[d] for d in range(len(base))] for p in pts[1:]]
    rank = 0
    cols = len(base)
    for col in range(cols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col] / rows[rank][col]
                rows[r] = [rows[r][j] - f * rows[rank][j] for j in range(cols)]
        rank += 1
    return rank


def convex_hull(points: Iterable) -> Polytope:
    pts = [p if isinstance(p, tuple) and all(type(c) is type(ZERO) for c in p) else as_point(p)
           for p in points]
    if not pts:
        raise ValueError("convex hull of an empty point list")
    m = len(pts[0])
    if any(len(p) != m for p in pts):
        raise DimensionError("points of mixed dimension")
    if m == 1:
        lo, hi = min(pts), max(pts)
        verts = (lo,) if lo == hi else (lo, hi)
        return Polytope(1, verts, verts)
    if m == 2:
        ring = _hull2(pts)
        return Polytope(2, tuple(sorted(ring)), tuple(ring))
    uniq = sorted(set(pts))
    keep = list(uniq)
    for p in uniq:
        others = [q for q in keep if q != p]
        if others and _in_hull_lp(p, others):
            keep = others
    verts = tuple(sorted(keep))
    return Polytope(m, verts, verts)


def point_polytope(p) -> Polytope:
    return convex_hull([as_point(p)])


def segment(a, b) -> Polytope:
    return convex_hull([as_point(a), as_point(b)])


def box(lo, hi) -> Polytope:
    """Axis-aligned box with corners lo, hi (m <= 2)."""
    lo, hi = as_point(lo), as_point(hi)
    if len(lo) == 1:
        return convex_hull([lo, hi])
    return convex_hull([(lo[0], lo[1]), (hi[0], lo[1]), (hi[0], hi[1]), (lo[0], hi[1])])


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise DimensionError(f"dimension mismatch: {a} vs {b}")


def contains(P: Polytope, x: Point) -> bool:
    _check_dims(P.dim, len(x))
    if P.dim == 1:
        return P.vertices[0][0] <= x[0] <= P.vertices[-1][0]
    if P.dim == 2:
        v = P.ccw
        if len(v) == 1:
            return v[0] == x
        if len(v) == 2:
            return _on_segment(v[0], v[1], x)
        n = len(v)
        return all(orient(v[i], v[(i + 1) % n], x) >= 0 for i in range(n))
    if len(P.vertices) == 1:
        return P.vertices[0] == tuple(x)
    return _in_hull_lp(tuple(x), P.vertices)


def _seg_seg(a: Point, b: Point, c: Point, d: Point) -> list:
    """Intersection points of closed segments ab and cd (overlap endpoints if collinear)."""
    if (max(a[0], b[0]) < min(c[0], d[0]) or max(c[0], d[0]) < min(a[0], b[0])
            or max(a[1], b[1]) < min(c[1], d[1]) or max(c[1], d[1]) < min(a[1], b[1])):
        return []
    d1, d2 = orient(c, d, a), orient(c, d, b)
    d3, d4 = orient(a, b, c), orient(a, b, d)
    if d1 == 0 and d2 == 0:
        return [p for p in (a, b, c, d) if _on_segment(a, b, p) and _on_segment(c, d, p)]
    if d1 * d2 <= 0 and d3 * d4 <= 0:
        t = d1 / (d1 - d2)
        return [(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))]
    return []


def _bbox_disjoint(P: Polytope, Q: Polytope) -> bool:
    (plo, phi), (qlo, qhi) = P.bbox(), Q.bbox()
    return any(phi[d] < qlo[d] or qhi[d] < plo[d] for d in range(P.dim))


def intersect(P: Polytope, Q: Polytope) -> Optional[Polytope]:
    """Exact intersection, or None when empty."""
    _check_dims(P.dim, Q.dim)
    if P.dim == 1:
        lo = max(P.vertices[0], Q.vertices[0])
        hi = min(P.vertices[-1], Q.vertices[-1])
        return convex_hull([lo, hi]) if lo <= hi else None
    if P.dim >= 3:
        if P.is_point():
            return P if contains(Q, P.vertices[0]) else None
        if Q.is_point():
            return Q if contains(P, Q.vertices[0]) else None
        raise DimensionError("m >= 3 intersection needs a point operand")
    if P == Q:
        return P
    if _bbox_disjoint(P, Q):
        return None
    cand = [v for v in P.ccw if contains(Q, v)]
    cand += [v for v in Q.ccw if contains(P, v)]
    for a, b in P.edges():
        for c, d in Q.edges():
            cand.extend(_seg_seg(a, b, c, d))
    if not cand:
        return None
    return convex_hull(cand)


def poly_subset(P: Polytope, Q: Polytope) -> bool:
    return all(contains(Q, v) for v in P.vertices)


# ---------------------------------------------------------------- regions


def _region_key(pieces: Sequence[Polytope]) -> tuple:
    return tuple(p.vertices for p in pieces)


@dataclass(frozen=True)
class Region:
    """Finite union of polytopes of a common dimension (never empty)."""

    dim: int
    pieces: tuple

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("a Region needs at least one piece")
        if any(p.dim != self.dim for p in self.pieces):
            raise DimensionError("region pieces of mixed dimension")

    @classmethod
    def of(cls, pieces: Iterable[Polytope]) -> "Region":
        """Canonical region: pieces deduplicated, pieces inside other pieces dropped, sorted."""
        uniq = sorted(set(pieces), key=lambda p: p.vertices)
        if not uniq:
            raise ValueError("a Region needs at least one piece")
        kept = []
        for i, p in enumerate(uniq):
            if any(j != i and poly_subset(p, q) for j, q in enumerate(uniq)):
                # keep p only if every container is itself equal (impossible after dedupe)
                continue
            kept.append(p)
        return cls(uniq[0].dim, tuple(kept))

    @classmethod
    def from_points(cls, points: Iterable) -> "Region":
        return cls.of(point_polytope(p) for p in points)

    @classmethod
    def single(cls, P: Polytope) -> "Region":
        return cls(P.dim, (P,))

    def vertices(self) -> list:
        return sorted({v for p in self.pieces for v in p.vertices})

    def is_convex_piece(self) -> bool:
        return len(self.pieces) == 1

    def is_point_set(self) -> bool:
        return all(p.is_point() for p in self.pieces)

    def __repr__(self) -> str:
        return "Region{" + " | ".join(repr(p) for p in self.pieces) + "}"


def as_region(x) -> Region:
    return x if isinstance(x, Region) else Region.single(x)


def region_contains(R: Region, x: Point) -> bool:
    return any(contains(p, x) for p in R.pieces)


def intersect_regions(R: Region, S: Region) -> Optional[Region]:
    _check_dims(R.dim, S.dim)
    out = []
    for p in R.pieces:
        for q in S.pieces:
            r = intersect(p, q)
            if r is not None:
                out.append(r)
    return Region.of(out) if out else None


def union_regions(regions: Iterable[Region]) -> Region:
    return Region.of(p for r in regions for p in r.pieces)


def hull_of_region(R: Region) -> Polytope:
    return convex_hull(v for p in R.pieces for v in p.vertices)


def _interval_cover(lo, hi, intervals: Iterable[tuple]) -> bool:
    reach = lo
    for a, b in sorted(intervals):
        if a > reach:
            return False
        if b > reach:
            reach = b
        if reach >= hi:
            return True
    return reach >= hi


def _y_range(P: Polytope, x) -> Optional[tuple]:
    """y-extent of a 2-dim polygon on the vertical line at x (x strictly inside no vertex)."""
    ys = []
    for a, b in P.edges():
        if a[0] == b[0]:
            continue
        if min(a[0], b[0]) < x < max(a[0], b[0]):
            t = (x - a[0]) / (b[0] - a[0])
            ys.append(a[1] + t * (b[1] - a[1]))
    if not ys:
        return None
    return min(ys), max(ys)


def _polygon_covered(P: Polytope, clips: Sequence[Polytope]) -> bool:
    """Whether a full-dimensional polygon is covered by full-dimensional clips inside it.

    The uncovered part is relatively open, so it is empty iff it misses the
    midline of every vertical slab between consecutive event abscissae.
    """
    if not clips:
        return False
    edges = list(P.edges())
    for q in clips:
        edges.extend(q.edges())
    xs = {v[0] for v in P.vertices}
    for q in clips:
        xs.update(v[0] for v in q.vertices)
    for i in range(len(edges)):
        a, b = edges[i]
        for j in range(i + 1, len(edges)):
            c, d = edges[j]
            for pt in _seg_seg(a, b, c, d):
                xs.add(pt[0])
    xs = sorted(xs)
    for x0, x1 in zip(xs, xs[1:]):
        xm = (x0 + x1) / 2
        span = _y_range(P, xm)
        if span is None:
            continue
        ivs = [r for r in (_y_range(q, xm) for q in clips) if r is not None]
        if not _interval_cover(span[0], span[1], ivs):
            return False
    return True


def _segment_covered(P: Polytope, clips: Sequence[Polytope]) -> bool:
    a, b = P.vertices[0], P.vertices[-1]
    d = tuple(b[i] - a[i] for i in range(P.dim))
    dd = sum(c * c for c in d)
    ivs = []
    for q in clips:
        ts = [sum((v[i] - a[i]) * d[i] for i in range(P.dim)) / dd for v in q.vertices]
        ivs.append((min(ts), max(ts)))
    return _interval_cover(ZERO, ONE, ivs)


def _piece_covered(P: Polytope, S: Region) -> bool:
    clips = []
    for q in S.pieces:
        c = intersect(P, q)
        if c is None:
            continue
        if c == P:
            return True
        clips.append(c)
    if not clips:
        return False
    k = P.affine_dim
    if k == 0:
        return True
    if k == 1:
        return _segment_covered(P, clips)
    return _polygon_covered(P, [c for c in clips if c.affine_dim == 2])


def region_subset(R, S) -> bool:
    """Whether every point of R lies in the union of S's pieces."""
    R, S = as_region(R), as_region(S)
    _check_dims(R.dim, S.dim)
    # cheap decisions: every piece inside one piece, or a vertex outside all pieces
    if all(any(poly_subset(P, Q) for Q in S.pieces) for P in R.pieces):
        return True
    if any(not region_contains(S, v) for P in R.pieces for v in P.vertices):
        return False
    if R.dim >= 3:
        if not R.is_point_set():
            raise DimensionError("region_subset supports m <= 2 or point pieces")
        return all(region_contains(S, p.vertices[0]) for p in R.pieces)
    return all(_piece_covered(P, S) for P in R.pieces)


def region_equal(R, S) -> bool:
    R, S = as_region(R), as_region(S)
    if R == S:
        return True
    return region_subset(R, S) and region_subset(S, R)


# ---------------------------------------------------------------- inflation


@lru_cache(maxsize=None)
def _unit_kgon(k: int) -> tuple:
    """Rational regular k-gon whose inscribed circle contains the unit disc.

    The exact circumradius is 1/cos(pi/k); a relative slack of 1e-9 absorbs the
    rounding of the rational approximation.
    """
    scale = (1.0 / math.cos(math.pi / k)) * (1 + 1e-9)
    verts = []
    for j in range(k):
        th = 2 * math.pi * j / k
        fx = Fraction(scale * math.cos(th)).limit_denominator(10 ** 12)
        fy = Fraction(scale * math.sin(th)).limit_denominator(10 ** 12)
        verts.append((to_q(fx), to_q(fy)))
    return tuple(verts)


def inflate(P: Polytope, c, norm: NormKind = LINF) -> Polytope:
    """Minkowski sum of P with the radius-c ball (l2: circumscribed k-gon)."""
    c = to_q(c)
    if c < 0:
        raise ValueError("inflation radius must be nonnegative")
    if c == 0:
        return P
    m = P.dim
    if norm.kind == "l2":
        if m != 2:
            raise DimensionError("l2 inflation is available for m = 2 only")
        ball = [(c * u[0], c * u[1]) for u in _unit_kgon(norm.k)]
    else:
        ball = [()]
        for _ in range(m):
            ball = [b + (s,) for b in ball for s in (-c, c)]
    return convex_hull(tuple(v[i] + w[i] for i in range(m)) for v in P.vertices for w in ball)


# ---------------------------------------------------------------- distances


def _linf_point_segment(x: Point, a: Point, b: Point) -> mpq:
    u0, u1 = x[0] - a[0], x[1] - a[1]
    d0, d1 = b[0] - a[0], b[1] - a[1]
    ts = {ZERO, ONE}
    if d0:
        ts.add(u0 / d0)
    if d1:
        ts.add(u1 / d1)
    if d0 != d1:
        ts.add((u0 - u1) / (d0 - d1))
    if d0 != -d1:
        ts.add((u0 + u1) / (d0 + d1))
    return min(max(abs(u0 - t * d0), abs(u1 - t * d1)) for t in ts if 0 <= t <= 1)


def _l2sq_point_segment(x: Point, a: Point, b: Point) -> mpq:
    d = [b[i] - a[i] for i in range(len(x))]
    u = [x[i] - a[i] for i in range(len(x))]
    dd = sum(c * c for c in d)
    t = ZERO if dd == 0 else min(ONE, max(ZERO, sum(u[i] * d[i] for i in range(len(x))) / dd))
    return sum((u[i] - t * d[i]) ** 2 for i in range(len(x)))


def _poly_distance(x: Point, P: Polytope, norm: NormKind):
    m = P.dim
    if m == 1:
        lo, hi = P.vertices[0][0], P.vertices[-1][0]
        g = lo - x[0] if x[0] < lo else (x[0] - hi if x[0] > hi else ZERO)
        return g if norm.exact else float(g)
    if m == 2:
        if len(P.ccw) == 1:
            v = P.ccw[0]
            if norm.exact:
                return max(abs(x[0] - v[0]), abs(x[1] - v[1]))
            return math.sqrt(float((x[0] - v[0]) ** 2 + (x[1] - v[1]) ** 2))
        if len(P.ccw) > 2 and contains(P, x):
            return ZERO if norm.exact else 0.0
        if norm.exact:
            return min(_linf_point_segment(x, a, b) for a, b in P.edges())
        return math.sqrt(float(min(_l2sq_point_segment(x, a, b) for a, b in P.edges())))
    if P.is_point():
        v = P.vertices[0]
        if norm.exact:
            return max(abs(x[i] - v[i]) for i in range(m))
        return math.sqrt(float(sum((x[i] - v[i]) ** 2 for i in range(m))))
    if norm.exact:
        return _linf_dist_lp(x, P.vertices)
    raise DimensionError("l2 distance to a polytope needs m <= 2")


def distance(x: Point, R, norm: NormKind = LINF):
    """Distance from x to a region (exact mpq for linf, float for l2)."""
    R = as_region(R)
    _check_dims(R.dim, len(x))
    return min(_poly_distance(x, p, norm) for p in R.pieces)
