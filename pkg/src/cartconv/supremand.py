"""Multi-well supremands W = dist(., K) with K = U_i A_i x A_i.

All level sets are taken on the raw distance; a growth exponent q only
enters at the outermost evaluation (W_g = W^q), so sublevel geometry stays
exact in the max-norm.
"""
from __future__ import annotations

import random
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Optional, Sequence

from gmpy2 import mpq

from .geometry import (
    LINF,
    NormKind,
    Point,
    Region,
    as_point,
    as_region,
    contains,
    convex_hull,
    distance,
    hull_of_region,
    inflate,
)
from .hull import DEFAULT_MAX_ITER, cartesian_hull, is_cartesian_convex, nonconvex_square
from .rational import to_q
from .squares import DEFAULT_ATOM_LIMIT, SquareUnion, maximal_squares

DEFAULT_EPS = mpq(1, 10 ** 6)


class HullNonConvergence(RuntimeError):
    def __init__(self, level):
        super().__init__(f"hull iteration did not converge at level {level}")
        self.level = level


class _LevelCache:
    """LRU memo of level hulls; reads are lock-free, insertion is serialized."""

    def __init__(self, maxsize: int = 2048):
        self.maxsize = maxsize
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key, compute: Callable):
        hit = self._data.get(key)
        if hit is not None:
            return hit
        val = compute()
        with self._lock:
            self._data[key] = val
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)
        return val

    def __len__(self) -> int:
        return len(self._data)

    def __getstate__(self):
        return {"maxsize": self.maxsize}

    def __setstate__(self, state):
        self.__init__(state["maxsize"])


@dataclass(frozen=True)
class Supremand:
    atoms: tuple
    norm: NormKind = LINF
    q: float = 1
    max_iter: int = DEFAULT_MAX_ITER
    limit: int = DEFAULT_ATOM_LIMIT
    _cache: _LevelCache = field(default_factory=_LevelCache, compare=False, repr=False)

    @classmethod
    def from_union(cls, E: SquareUnion, norm: NormKind = LINF, q: float = 1, **kw) -> "Supremand":
        return cls(tuple(E.atoms), norm, q, **kw)

    @classmethod
    def from_atoms(cls, atoms: Iterable, norm: NormKind = LINF, q: float = 1, **kw) -> "Supremand":
        return cls.from_union(SquareUnion.build(atoms), norm, q, **kw)

    @property
    def dim(self) -> int:
        return self.atoms[0].dim

    @property
    def n(self) -> int:
        return len(self.atoms)

    def union_hull(self):
        return convex_hull(v for a in self.atoms for v in a.vertices())

    def power(self, raw):
        """Apply the growth exponent to a raw distance value."""
        if self.q == 1:
            return raw
        if isinstance(raw, type(DEFAULT_EPS)) and float(self.q).is_integer():
            return raw ** int(self.q)
        return float(raw) ** self.q


# ---------------------------------------------------------------- W and friends


def _pt(x) -> Point:
    return x if isinstance(x, tuple) and all(isinstance(c, type(DEFAULT_EPS)) for c in x) else as_point(x)


def atom_distances(S: Supremand, x) -> list:
    x = _pt(x)
    return [distance(x, a, S.norm) for a in S.atoms]


def eval_W_raw(S: Supremand, xi, zeta):
    dx, dz = atom_distances(S, xi), atom_distances(S, zeta)
    return min(max(a, b) for a, b in zip(dx, dz))


def eval_W(S: Supremand, xi, zeta):
    """min_i max(dist(xi, A_i), dist(zeta, A_i)), raised to the power q."""
    return S.power(eval_W_raw(S, xi, zeta))


def eval_W_hat(f: Callable, xi, zeta):
    return max(f(xi, zeta), f(zeta, xi), f(xi, xi), f(zeta, zeta))


def _inflate_region(R: Region, c, norm: NormKind) -> Region:
    return Region.of(inflate(p, c, norm) for p in R.pieces)


def sublevel(S: Supremand, c) -> SquareUnion:
    """L_c(W) on the raw-distance scale: atoms inflated by c."""
    c = to_q(c)
    tag = f"sublevel {c}"
    if not S.norm.exact:
        tag += f" ({S.norm} polygon overshoot)"
    return SquareUnion.build([_inflate_region(a, c, S.norm) for a in S.atoms], provenance=tag)


# ---------------------------------------------------------------- level hulls


@dataclass(frozen=True)
class LevelHull:
    level: mpq
    squares: tuple  # convex polytopes: hulls of the final maximal squares
    iterations: int
    converged: bool

    def member(self, x: Point, y: Point) -> bool:
        return any(contains(P, x) and contains(P, y) for P in self.squares)


def level_hull(S: Supremand, c) -> LevelHull:
    c = to_q(c)

    def compute() -> LevelHull:
        tr = cartesian_hull(sublevel(S, c), max_iter=S.max_iter, limit=S.limit, verify=False)
        polys = tuple(hull_of_region(B) for B in tr.final_squares.squares)
        return LevelHull(c, polys, tr.iterations, tr.fixpoint_reached)

    return S._cache.get(c, compute)


def level_member(S: Supremand, xi, zeta, c) -> bool:
    """Whether (xi, zeta) lies in the Cartesian convex hull of L_c(W)."""
    c = to_q(c)
    xi, zeta = _pt(xi), _pt(zeta)
    if c < 0:
        return False
    # quick accept: one inflated well already holds both points
    for a in S.atoms:
        if S.norm.exact and distance(xi, a, S.norm) <= c and distance(zeta, a, S.norm) <= c:
            return True
    H = level_hull(S, c)
    if not H.converged:
        raise HullNonConvergence(c)
    return H.member(xi, zeta)


@dataclass(frozen=True)
class LevelSearch:
    """Result of a level bisection: value is the upper bracket end."""

    value: object
    lo: object
    hi: object
    probes: int
    status: str = "ok"

    def __float__(self) -> float:
        return float(self.value)


def _q_of(x) -> mpq:
    return to_q(x)


def bisect_level(pred: Callable, lo, hi, eps) -> LevelSearch:
    """Smallest level within eps at which a monotone predicate holds.

    Requires pred(hi) true; lo is a level known (or assumed) to fail unless
    lo == hi.
    """
    lo, hi, eps = _q_of(lo), _q_of(hi), _q_of(eps)
    probes = 0
    if lo >= hi:
        return LevelSearch(hi, hi, hi, probes)
    if lo >= 0:
        probes += 1
        if pred(lo):
            return LevelSearch(lo, lo, lo, probes)
    while hi - lo > eps:
        mid = (lo + hi) / 2
        probes += 1
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return LevelSearch(hi, lo, hi, probes)


def envelope_lower_bound(S: Supremand, xi, zeta):
    """Level below which neither point can lie in any convexified well."""
    K = Region.single(S.union_hull())
    lo = max(distance(_pt(xi), K, S.norm), distance(_pt(zeta), K, S.norm))
    if not S.norm.exact:
        import math

        lo = lo * math.cos(math.pi / S.norm.k)
    return lo


def eval_envelope_search(S: Supremand, xi, zeta, eps=DEFAULT_EPS) -> LevelSearch:
    xi, zeta = _pt(xi), _pt(zeta)
    hi = min(eval_W_raw(S, xi, zeta), hull_well_bound(S, xi, zeta))
    if hi == 0:
        return LevelSearch(_q_of(0), _q_of(0), _q_of(0), 0)
    if not S.norm.exact:
        hi = hi * (1 + 1e-12) + 1e-12
    lo, hi, eps = _q_of(envelope_lower_bound(S, xi, zeta)), _q_of(hi), _q_of(eps)
    pred = lambda c: level_member(S, xi, zeta, c)  # noqa: E731
    # the upper bound is often attained; one probe just below settles that case
    if hi - eps > lo and not pred(hi - eps):
        return LevelSearch(hi, hi - eps, hi, 1)
    res = bisect_level(pred, lo, hi, eps)
    return LevelSearch(res.value, res.lo, res.hi, res.probes + 1)


def hull_well_bound(S: Supremand, xi, zeta):
    """min_i max(dist(xi, A_i^co), dist(zeta, A_i^co)): (A_i)_c^co squared lies in the level hull."""
    best = None
    for a in S.atoms:
        H = Region.single(hull_of_region(a))
        v = max(distance(xi, H, S.norm), distance(zeta, H, S.norm))
        best = v if best is None or v < best else best
    return best


def eval_envelope(S: Supremand, xi, zeta, eps=DEFAULT_EPS):
    """Cartesian level-convex envelope W^lc(xi, zeta) within eps (power q applied)."""
    return S.power(eval_envelope_search(S, xi, zeta, eps).value)


# ---------------------------------------------------------------- W4


def m_level_member(S: Supremand, x: Point, c) -> bool:
    """Whether x lies in M^c, the union of pairwise intersections of inflated wells."""
    inflated = [[inflate(p, c, S.norm) for p in a.pieces] for a in S.atoms]
    hits = sum(1 for pieces in inflated if any(contains(P, x) for P in pieces))
    return hits >= 2


def eval_W4_search(S: Supremand, xi, zeta, eps=DEFAULT_EPS, cap=None) -> LevelSearch:
    if S.n < 2:
        raise ValueError("W4 needs at least two wells")
    xi, zeta = _pt(xi), _pt(zeta)
    pred = lambda c: m_level_member(S, xi, c) and m_level_member(S, zeta, c)  # noqa: E731
    cap = _q_of(cap) if cap is not None else None
    hi = mpq(1, 64)
    probes = 0
    while True:
        probes += 1
        if pred(hi):
            break
        if cap is not None and hi >= cap:
            return LevelSearch(None, cap, None, probes, "infeasible-below-cap")
        hi = hi * 2 if cap is None else min(hi * 2, cap)
    res = bisect_level(pred, 0 if hi == mpq(1, 64) else hi / 2, hi, eps)
    return LevelSearch(res.value, res.lo, res.hi, res.probes + probes)


def eval_W4(S: Supremand, xi, zeta, eps=DEFAULT_EPS, cap=None):
    """inf{c : xi, zeta in M^c}; returns None when infeasible below the cap."""
    r = eval_W4_search(S, xi, zeta, eps, cap)
    return None if r.value is None else S.power(r.value)


def w4_closed_form(S: Supremand, xi, zeta):
    """Max over both points of the second-smallest well distance (exact oracle)."""
    def second(x):
        return sorted(atom_distances(S, x))[1]
    return max(second(xi), second(zeta))


# ---------------------------------------------------------------- Jensen checks


@dataclass(frozen=True)
class JensenViolation:
    quad: tuple
    alpha: Point
    beta: Point
    value: object
    bound: object
    margin: float


def jensen_samples(rng: random.Random, anchors: Sequence[Point], n_quads: int,
                   n_seg: int = 3, jitter=mpq(1, 8), den: int = 16) -> list:
    """Rational quadruples near anchor points with segment parameters.

    Each sample is (xi1, xi2, zeta1, zeta2, [(s, t), ...]).
    """
    out = []
    m = len(anchors[0])
    for _ in range(n_quads):
        quad = []
        for _ in range(4):
            base = rng.choice(anchors)
            quad.append(tuple(base[d] + jitter * mpq(rng.randint(-den, den), den) for d in range(m)))
        params = [(mpq(rng.randint(0, den), den), mpq(rng.randint(0, den), den)) for _ in range(n_seg)]
        out.append((*quad, params))
    return out


def check_jensen(f: Callable, samples: Iterable, tol: float = 0.0) -> list:
    """Test f(alpha, beta) <= max of f over the 16 corner pairs; return violations."""
    memo: dict = {}

    def fv(a, b):
        key = (a, b)
        if key not in memo:
            memo[key] = f(a, b)
        return memo[key]

    violations = []
    for xi1, xi2, z1, z2, params in samples:
        corners = (xi1, xi2, z1, z2)
        bound = max(fv(a, b) for a, b in product(corners, repeat=2))
        for s, t in params:
            alpha = tuple(xi1[d] + s * (xi2[d] - xi1[d]) for d in range(len(xi1)))
            beta = tuple(z1[d] + t * (z2[d] - z1[d]) for d in range(len(z1)))
            val = fv(alpha, beta)
            margin = float(val) - float(bound)
            if margin > tol:
                violations.append(JensenViolation(corners, alpha, beta, val, bound, margin))
    return violations


# ---------------------------------------------------------------- level convexity


@dataclass(frozen=True)
class LevelConvexity:
    convex: bool
    level: Optional[mpq] = None
    witness: Optional[Region] = None


def is_cartesian_level_convex(S: Supremand, levels: Sequence) -> LevelConvexity:
    """Cartesian convexity of every probed raw sublevel set."""
    for c in levels:
        c = to_q(c)
        B = nonconvex_square(sublevel(S, c), limit=S.limit)
        if B is not None:
            return LevelConvexity(False, c, B)
    return LevelConvexity(True)
