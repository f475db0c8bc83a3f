"""L^p approximation of the supremal functional on piecewise-constant u.

For u taking value v_k on a cell of measure w_k, the double integral is the
finite sum  I_p(u) = (sum_{k,l} w_k w_l W_g(v_k, v_l)^p)^(1/p),  W_g = W^q.
Minimization under a fixed mean (a weakly continuous constraint) is done by
penalized Nelder-Mead with restarts; the reference limit value is the least
(J^rlx)^q over mean-constrained candidates.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from gmpy2 import mpq
from scipy.optimize import minimize

from .functional import SimpleFunction, eval_J_rlx_search, eval_J_raw
from .geometry import Region, as_point, distance, hull_of_region
from .rational import to_q
from .squares import VerificationError
from .supremand import Supremand, atom_distances

DEFAULT_PMAX = 128


def default_ladder(q: float, pmax: int = DEFAULT_PMAX) -> list:
    """q, 2q, 4q, ... capped at pmax (pmax itself always included)."""
    out, p = [], float(q)
    while p < pmax:
        out.append(p)
        p *= 2
    out.append(float(pmax))
    return out


@dataclass
class LpProblem:
    S: Supremand
    n_cells: int
    mean: tuple
    ladder: list
    box: tuple  # (lo, hi), each a float per coordinate
    restarts: int = 4
    max_iter: int = 3000
    penalty: float = 1e3
    seed: int = 0
    grid: int = 33
    ref_budget: int = 400

    def __post_init__(self):
        if self.n_cells < 2:
            raise ValueError("n_cells must be at least 2")
        if self.penalty <= 0:
            raise ValueError("penalty weight must be positive")
        if any(b <= a for a, b in zip(self.ladder, self.ladder[1:])):
            raise ValueError("exponent ladder must be strictly increasing")
        if self.ladder and self.ladder[0] < self.S.q:
            raise ValueError("exponents must be at least q")
        self.mean = tuple(float(x) for x in self.mean)
        lo, hi = self.box
        self.box = (np.asarray(lo, float).reshape(self.dim), np.asarray(hi, float).reshape(self.dim))

    @property
    def dim(self) -> int:
        return self.S.dim

    @property
    def q(self) -> float:
        return float(self.S.q)


# ---------------------------------------------------------------- float distances


def _edges(P) -> list:
    return [(np.array([float(a[0]), float(a[1])]), np.array([float(b[0]), float(b[1])])) for a, b in P.edges()]


def _piece_distance(P, X: np.ndarray, l2: bool) -> np.ndarray:
    """Distances from the rows of X to polytope P (float)."""
    m = P.dim
    if m == 1:
        lo, hi = float(P.vertices[0][0]), float(P.vertices[-1][0])
        x = X[:, 0]
        return np.maximum(lo - x, 0) + np.maximum(x - hi, 0)
    if P.is_point() or m > 2:
        if not P.is_point():
            raise ValueError("float distances for m >= 3 need point atoms")
        diff = np.abs(X - np.array([float(c) for c in P.vertices[0]]))
        return np.sqrt((diff ** 2).sum(1)) if l2 else diff.max(1)
    best = np.full(len(X), np.inf)
    for a, b in _edges(P):
        d = b - a
        u = X - a
        if l2:
            t = np.clip((u @ d) / (d @ d), 0, 1)
            r = u - t[:, None] * d
            val = np.sqrt((r ** 2).sum(1))
        else:
            cands = [np.zeros(len(X)), np.ones(len(X))]
            with np.errstate(divide="ignore", invalid="ignore"):
                for num, den in ((u[:, 0], d[0]), (u[:, 1], d[1]),
                                 (u[:, 0] - u[:, 1], d[0] - d[1]), (u[:, 0] + u[:, 1], d[0] + d[1])):
                    if den != 0:
                        cands.append(np.clip(num / den, 0, 1))
            val = np.min([np.maximum(np.abs(u[:, 0] - t * d[0]), np.abs(u[:, 1] - t * d[1])) for t in cands], 0)
        best = np.minimum(best, val)
    if len(P.ccw) > 2:
        inside = np.ones(len(X), bool)
        for a, b in _edges(P):
            cross = (b[0] - a[0]) * (X[:, 1] - a[1]) - (b[1] - a[1]) * (X[:, 0] - a[0])
            inside &= cross >= 0
        best[inside] = 0.0
    return best


def float_atom_distances(S: Supremand, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, float).reshape(-1, S.dim)
    l2 = not S.norm.exact
    cols = []
    for a in S.atoms:
        cols.append(np.min([_piece_distance(P, X, l2) for P in a.pieces], 0))
    return np.stack(cols, 1)


def _pair_matrix(D: np.ndarray) -> np.ndarray:
    """W_raw(v_k, v_l) = min_i max(D[k, i], D[l, i])."""
    return np.min(np.maximum(D[:, None, :], D[None, :, :]), axis=2)


def _ip_from_matrix(Wg: np.ndarray, w: np.ndarray, p: float) -> float:
    M = Wg.max()
    if M <= 0:
        return 0.0
    R = (Wg / M) ** p
    return float(M * (w @ R @ w) ** (1.0 / p))


def eval_Ip(P, u: SimpleFunction, p: float) -> float:
    """(sum w_k w_l W_g(v_k, v_l)^p)^(1/p), computed with max rescaling."""
    S = P.S if isinstance(P, LpProblem) else P
    if p < S.q:
        raise ValueError("p must be at least q")
    D = np.array([[float(d) for d in atom_distances(S, v)] for v in u.values])
    Wg = _pair_matrix(D) ** float(S.q)
    w = np.array([float(x) for x in u.weights])
    return _ip_from_matrix(Wg, w, p)


def ip_power_sum_exact(S: Supremand, u: SimpleFunction, p: int) -> mpq:
    """Exact sum w_k w_l W_g^p for the max-norm with integer q and p."""
    if not S.norm.exact or not float(S.q).is_integer():
        raise ValueError("exact power sums need the max-norm and an integer q")
    q = int(S.q)
    dists = [atom_distances(S, v) for v in u.values]
    total = mpq(0)
    for wk, dk in zip(u.weights, dists):
        for wl, dl in zip(u.weights, dists):
            W = min(max(a, b) for a, b in zip(dk, dl))
            total += wk * wl * W ** (q * p)
    return total


def ip_monotone_exact(S: Supremand, u: SimpleFunction, p1: int, p2: int) -> bool:
    """I_{p1}(u) <= I_{p2}(u) decided exactly via X_{p1}^{p2} <= X_{p2}^{p1}."""
    x1, x2 = ip_power_sum_exact(S, u, p1), ip_power_sum_exact(S, u, p2)
    return x1 ** p2 <= x2 ** p1


# ---------------------------------------------------------------- coercivity


def growth_constants(S: Supremand) -> tuple:
    """(c1, c2) with W_g >= c1 |(xi, zeta)|^q - c2 for the distance-power form.

    dist((xi, zeta), K) >= |(xi, zeta)| - R with R the largest norm of a point
    of K, and (a + b)^q <= 2^(q-1)(a^q + b^q), so c1 = 2^(1-q), c2 = R^q.
    """
    l2 = not S.norm.exact
    R = 0.0
    for a in S.atoms:
        for v in a.vertices():
            vv = np.array([float(c) for c in v])
            R = max(R, float(np.sqrt((vv ** 2).sum())) if l2 else float(np.abs(vv).max()))
    if l2:
        R /= math.cos(math.pi / S.norm.k)  # polygon overshoot of the inflated wells
    return 2.0 ** (1 - S.q), R ** S.q


@dataclass(frozen=True)
class CoercivityChain:
    lp: float
    lq: float
    field_bound: float
    u_bound: float

    def holds(self, rtol: float = 1e-9) -> bool:
        seq = (self.lp, self.lq, self.field_bound, self.u_bound)
        return all(a >= b * (1 - rtol) - 1e-300 for a, b in zip(seq, seq[1:]))


def coercivity_chain(S: Supremand, X: np.ndarray, w: np.ndarray, p: float) -> CoercivityChain:
    """||W'||_p >= ||W'||_q >= c1 || |v_u|^q ||_q >= c1 ||u||_q^q, W' = W_g + c2."""
    q = float(S.q)
    c1, c2 = growth_constants(S)
    X = np.asarray(X, float).reshape(-1, S.dim)
    D = float_atom_distances(S, X)
    Wp = _pair_matrix(D) ** q + c2
    norms = np.sqrt((X ** 2).sum(1)) if not S.norm.exact else np.abs(X).max(1)
    V = np.maximum(norms[:, None], norms[None, :])  # product norm of (u(x), u(y))
    lp = _ip_from_matrix(Wp, w, p)
    lq = _ip_from_matrix(Wp, w, q)
    field_bound = c1 * _ip_from_matrix(V ** q, w, q)
    u_bound = c1 * float(w @ norms ** q)
    return CoercivityChain(lp, lq, field_bound, u_bound)


# ---------------------------------------------------------------- minimization


def _repair(P: LpProblem, X: np.ndarray) -> np.ndarray:
    """Shift-and-clip each coordinate so the cell mean equals the target exactly (up to fp)."""
    X = np.clip(np.asarray(X, float).reshape(P.n_cells, P.dim), P.box[0], P.box[1])
    w = 1.0 / P.n_cells
    for d in range(P.dim):
        lo, hi, target = P.box[0][d], P.box[1][d], P.mean[d]
        col = X[:, d]
        f = lambda s: float(np.clip(col + s, lo, hi).sum() * w) - target  # noqa: E731
        a, b = lo - col.max(), hi - col.min()
        if f(a) > 0 or f(b) < 0:
            continue  # target outside the box: leave for the penalty
        for _ in range(80):
            mid = 0.5 * (a + b)
            if f(mid) < 0:
                a = mid
            else:
                b = mid
        X[:, d] = np.clip(col + 0.5 * (a + b), lo, hi)
    return X


def _anchor_points(P: LpProblem) -> list:
    pts = {tuple(float(c) for c in v) for a in P.S.atoms for v in a.vertices()}
    pts.add(tuple(P.mean))
    return [np.clip(np.array(p), P.box[0], P.box[1]) for p in sorted(pts)]


def _mixture_starts(P: LpProblem) -> list:
    """Two-valued starts mixing anchor points so that their mean is near the target."""
    ubar = np.array(P.mean)
    out = []
    anchors = _anchor_points(P)
    for a in anchors:
        for b in anchors:
            d = b - a
            dd = float(d @ d)
            if dd == 0:
                continue
            theta = float((ubar - a) @ d) / dd
            if not 0 < theta < 1:
                continue
            k = int(round(theta * P.n_cells))
            if not 0 < k < P.n_cells:
                continue
            X = np.vstack([np.tile(a, (P.n_cells - k, 1)), np.tile(b, (k, 1))])
            out.append(X)
    return out


@dataclass
class MinResult:
    p: float
    values: np.ndarray
    value: float
    iterations: int
    approximate: bool
    u_norm_q: float


class _Objective:
    def __init__(self, P: LpProblem, p: float):
        self.P, self.p = P, p
        self.w = np.full(P.n_cells, 1.0 / P.n_cells)

    def ip(self, X: np.ndarray) -> float:
        D = float_atom_distances(self.P.S, X)
        return _ip_from_matrix(_pair_matrix(D) ** self.P.q, self.w, self.p)

    def penalized(self, x: np.ndarray) -> float:
        X = x.reshape(self.P.n_cells, self.P.dim)
        gap = X.mean(0) - np.array(self.P.mean)
        return self.ip(X) + self.P.penalty * float(gap @ gap)


def _u_norm_q(X: np.ndarray, q: float, exact_norm: bool) -> float:
    norms = np.abs(X).max(1) if exact_norm else np.sqrt((X ** 2).sum(1))
    return float(np.mean(norms ** q) ** (1 / q))


def minimize_Ip(P: LpProblem, p: float, extra_starts: Sequence = (), pool: Optional[list] = None,
                checks: Optional[list] = None) -> MinResult:
    """Penalized Nelder-Mead with restarts; returns the best repaired candidate.

    Every accepted candidate is appended to ``pool`` and has its coercivity
    chain recorded in ``checks`` (raising if the chain fails).
    """
    obj = _Objective(P, p)
    rng = np.random.default_rng([P.seed, int(p * 1000)])
    lo, hi = P.box
    seeds = [np.tile(np.clip(np.array(P.mean), lo, hi), (P.n_cells, 1))]
    seeds += _mixture_starts(P)
    seeds += [np.asarray(s, float).reshape(P.n_cells, P.dim) for s in extra_starts]
    randoms = [rng.uniform(lo, hi, size=(P.n_cells, P.dim)) for _ in range(P.restarts)]
    scored = sorted(((obj.ip(_repair(P, s)), i) for i, s in enumerate(seeds)))
    starts = [seeds[i] for _, i in scored[: P.restarts]] + randoms

    def accept(X: np.ndarray) -> float:
        val = obj.ip(X)
        chain = coercivity_chain(P.S, X, obj.w, p)
        if checks is not None:
            checks.append(chain)
        if not chain.holds():
            raise VerificationError(f"coercivity chain failed at p={p}: {chain}")
        if pool is not None:
            pool.append(X.copy())
        return val

    best_X, best_val = None, math.inf
    total_iter, capped = 0, False
    for s in seeds[:1] + starts:
        X0 = _repair(P, s)
        v0 = accept(X0)
        if v0 < best_val:
            best_X, best_val = X0, v0
        if v0 == 0.0:
            continue
        bounds = [(lo[d], hi[d]) for _ in range(P.n_cells) for d in range(P.dim)]
        res = minimize(obj.penalized, X0.ravel(), method="Nelder-Mead", bounds=bounds,
                       options={"maxiter": P.max_iter, "xatol": 1e-9, "fatol": 1e-12, "adaptive": True})
        total_iter += int(res.nit)
        capped |= res.nit >= P.max_iter
        X1 = _repair(P, res.x)
        v1 = accept(X1)
        if v1 < best_val:
            best_X, best_val = X1, v1
    return MinResult(p, best_X, best_val, total_iter, capped, _u_norm_q(best_X, P.q, P.S.norm.exact))


# ---------------------------------------------------------------- reference


@dataclass
class Reference:
    value: float
    u: Optional[SimpleFunction]
    evaluated: int
    status: str


def _box_grid(P: LpProblem) -> list:
    lo, hi = P.box
    axes = [[to_q(float(lo[d])) + (to_q(float(hi[d])) - to_q(float(lo[d]))) * mpq(i, P.grid - 1)
             for i in range(P.grid)] for d in range(P.dim)]
    pts = [()]
    for ax in axes:
        pts = [p + (x,) for p in pts for x in ax]
    return pts


def reference_candidates(P: LpProblem) -> list:
    """Constant u and exact two-valued u with weights k/n and mean equal to the target."""
    ubar = tuple(to_q(float(x)) for x in P.mean)
    lo = [to_q(float(x)) for x in P.box[0]]
    hi = [to_q(float(x)) for x in P.box[1]]
    n = P.n_cells
    out = [SimpleFunction.make([ubar])]
    for a in _box_grid(P):
        for k in range(1, n):
            th = mpq(k, n)
            b = tuple((ubar[d] - (1 - th) * a[d]) / th for d in range(P.dim))
            if b == a or not all(lo[d] <= b[d] <= hi[d] for d in range(P.dim)):
                continue
            out.append(SimpleFunction.make([a, b], [1 - th, th]))
    return out


def reference_value(P: LpProblem, eps=mpq(1, 10 ** 6)) -> Reference:
    """min (J^rlx)^q over mean-constrained candidates: cheap bounds, then bisection."""
    S = P.S
    cands = reference_candidates(P)
    K = Region.single(S.union_hull())
    hulls = [Region.single(hull_of_region(a)) for a in S.atoms]
    scored = []
    for u in cands:
        vals = u.distinct_values()
        lower = max(distance(v, K, S.norm) for v in vals)
        upper = min(min(max(distance(v, H, S.norm) for v in vals) for H in hulls), eval_J_raw(S, u))
        scored.append((float(upper), float(lower), u))
    scored.sort(key=lambda t: (t[0], t[1]))
    best, best_u = scored[0][0], scored[0][2]
    evaluated, status = 0, "ok"
    for upper, lower, u in sorted(scored, key=lambda t: (t[1], t[0])):
        if lower >= best:
            break
        if evaluated >= P.ref_budget:
            status = "budget-exceeded"
            break
        coarse = eval_J_rlx_search(S, u, mpq(1, 1000))
        evaluated += 1
        if float(coarse.lo) >= best:
            continue
        fine = float(eval_J_rlx_search(S, u, eps).value)
        if fine < best:
            best, best_u = fine, u
    return Reference(float(best) ** P.q, best_u, evaluated, status)


# ---------------------------------------------------------------- sweep


@dataclass
class SweepResult:
    entries: list
    reference: float
    reference_u: Optional[SimpleFunction]
    reference_status: str
    monotone: bool
    coercivity_checked: int
    settings: dict = field(default_factory=dict)

    def csv_rows(self) -> list:
        return [(e["p"], e["min_value"], e["gap"], e["iterations"]) for e in self.entries]


def gamma_sweep(P: LpProblem) -> SweepResult:
    if not P.ladder:
        raise ValueError("empty exponent ladder")
    pool: list = []
    checks: list = []
    results = []
    prev: list = []
    for p in P.ladder:
        r = minimize_Ip(P, p, extra_starts=prev, pool=pool, checks=checks)
        results.append(r)
        prev = [r.values]
    # minima over one shared candidate pool are monotone in p by construction
    w = np.full(P.n_cells, 1.0 / P.n_cells)
    D_cache = [float_atom_distances(P.S, X) for X in pool]
    ref = reference_value(P)
    entries = []
    for r in results:
        vals = [_ip_from_matrix(_pair_matrix(D) ** P.q, w, r.p) for D in D_cache]
        i = int(np.argmin(vals))
        X = pool[i]
        entries.append({
            "p": r.p,
            "min_value": float(vals[i]),
            "gap": ref.value - float(vals[i]),
            "rel_gap": (ref.value - float(vals[i])) / ref.value if ref.value > 0 else float(vals[i]),
            "iterations": r.iterations,
            "approximate": r.approximate,
            "u_norm_q": _u_norm_q(X, P.q, P.S.norm.exact),
            "minimizer": X.ravel().tolist(),
        })
    mins = [e["min_value"] for e in entries]
    monotone = all(b >= a * (1 - 1e-12) for a, b in zip(mins, mins[1:]))
    settings = {"n_cells": P.n_cells, "mean": list(P.mean), "ladder": list(P.ladder),
                "box": [P.box[0].tolist(), P.box[1].tolist()], "restarts": P.restarts,
                "max_iter": P.max_iter, "penalty": P.penalty, "seed": P.seed, "q": P.q,
                "norm": str(P.S.norm), "grid": P.grid}
    return SweepResult(entries, ref.value, ref.u, ref.status, monotone, len(checks), settings)


def simple_from_array(X: np.ndarray) -> SimpleFunction:
    X = np.asarray(X, float)
    return SimpleFunction.make([as_point(row) for row in X])
