"""Symmetric diagonal sets E = U_i A_i x A_i and their maximal Cartesian squares.

A point x of U A_i has a membership pattern {i : x in A_i}.  A region B gives a
Cartesian square B x B inside E exactly when the patterns realized by points of
B pairwise share an index.  Maximal squares are therefore unions over maximal
pairwise-intersecting families of realized patterns, which we enumerate as
maximal cliques.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .geometry import (
    DimensionError,
    Point,
    Polytope,
    Region,
    as_point,
    as_region,
    contains,
    intersect_regions,
    region_contains,
    region_equal,
    region_subset,
    union_regions,
)
from .rational import to_q

DEFAULT_ATOM_LIMIT = 16


class LimitError(RuntimeError):
    """A configured enumeration bound was exceeded."""

    def __init__(self, msg: str, partial=None):
        super().__init__(msg)
        self.partial = partial


class VerificationError(RuntimeError):
    """An internal consistency check failed (indicates a bug, never returned silently)."""


# ---------------------------------------------------------------- data types


@dataclass(frozen=True)
class SquareUnion:
    """E = U_i A_i x A_i encoded by its atoms A_i (each a Region)."""

    dim: int
    atoms: tuple
    provenance: str = field(default="input", compare=False)

    @classmethod
    def build(cls, atoms: Iterable, provenance: str = "input") -> "SquareUnion":
        regs = [as_region(a) for a in atoms]
        if not regs:
            raise ValueError("a SquareUnion needs at least one atom")
        dim = regs[0].dim
        if any(r.dim != dim for r in regs):
            raise DimensionError("atoms of mixed dimension")
        return cls(dim, _normalize_atoms(regs), provenance)

    @property
    def n(self) -> int:
        return len(self.atoms)

    def is_discrete(self) -> bool:
        return all(a.is_point_set() for a in self.atoms)

    def union(self) -> Region:
        return union_regions(self.atoms)

    def contains_pair(self, x: Point, y: Point) -> bool:
        return any(region_contains(a, x) and region_contains(a, y) for a in self.atoms)


def _normalize_atoms(regs: Sequence[Region]) -> tuple:
    """Drop atoms contained in another atom; among equal atoms keep the first."""
    uniq: list = []
    for r in regs:
        if r not in uniq:
            uniq.append(r)
    kept = []
    for i, r in enumerate(uniq):
        redundant = False
        for j, s in enumerate(uniq):
            if i == j or not region_subset(r, s):
                continue
            if j < i or not region_subset(s, r):
                redundant = True
                break
        if not redundant:
            kept.append(r)
    return tuple(kept)


@dataclass(frozen=True)
class Pattern:
    indices: tuple
    intersection: Region
    exact: bool


@dataclass(frozen=True)
class MaximalSquareSet:
    squares: tuple
    hidden: tuple
    families: tuple = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.squares)

    @property
    def hidden_count(self) -> int:
        return sum(self.hidden)


# ---------------------------------------------------------------- patterns


def _others(E: SquareUnion, S: Sequence[int]) -> Optional[Region]:
    rest = [E.atoms[j] for j in range(E.n) if j not in S]
    return union_regions(rest) if rest else None


def _probe_points(R: Region) -> list:
    pts = []
    for p in R.pieces:
        vs = p.vertices
        pts.extend(vs)
        k = len(vs)
        pts.append(tuple(sum(v[d] for v in vs) / k for d in range(p.dim)))
        if p.dim == 2 and len(p.ccw) > 1:
            for a, b in p.edges():
                pts.append(((a[0] + b[0]) / 2, (a[1] + b[1]) / 2))
    return pts


def _escapes(R: Region, others: Optional[Region]) -> bool:
    """Whether R has a point outside ``others`` (cheap probes first)."""
    if others is None:
        return True
    if any(not region_contains(others, x) for x in _probe_points(R)):
        return True
    return not region_subset(R, others)


def _point_patterns(E: SquareUnion) -> dict:
    pats: dict = {}
    for a in E.atoms:
        for p in a.pieces:
            x = p.vertices[0]
            if x in pats:
                continue
            pats[x] = tuple(i for i, b in enumerate(E.atoms) if region_contains(b, x))
    return pats


@lru_cache(maxsize=4096)
def _patterns_cached(E: SquareUnion, limit: int) -> tuple:
    if E.n > limit:
        raise LimitError(f"{E.n} atoms exceed the configured limit {limit}")
    if E.is_discrete():
        groups: dict = {}
        for x, S in _point_patterns(E).items():
            groups.setdefault(S, []).append(x)
        return tuple(Pattern(S, Region.from_points(pts), True) for S, pts in sorted(groups.items()))
    if E.dim > 2:
        raise DimensionError("polytope atoms need m <= 2; use point-cloud atoms for m >= 3")
    out = []

    def dfs(S: tuple, P: Region) -> None:
        out.append(Pattern(S, P, _escapes(P, _others(E, S))))
        for j in range(S[-1] + 1, E.n):
            Q = intersect_regions(P, E.atoms[j])
            if Q is not None:
                dfs(S + (j,), Q)

    for i in range(E.n):
        dfs((i,), E.atoms[i])
    out.sort(key=lambda p: (len(p.indices), p.indices))
    return tuple(out)


def realizable_patterns(E: SquareUnion, limit: int = DEFAULT_ATOM_LIMIT) -> list:
    """All index sets with nonempty common intersection, with exactness flags.

    In the discrete regime only exact patterns (those of actual atom points)
    are listed, since they are the only ones any point realizes.
    """
    return list(_patterns_cached(E, limit))


# ---------------------------------------------------------------- cliques


def bron_kerbosch(adj: dict) -> list:
    """Maximal cliques of an undirected graph (pivoting Bron-Kerbosch)."""
    out: list = []

    def expand(R: frozenset, P: set, X: set) -> None:
        if not P and not X:
            out.append(R)
            return
        u = max(P | X, key=lambda v: (len(adj[v] & P), -v))
        for v in sorted(P - adj[u]):
            expand(R | {v}, P & adj[v], X & adj[v])
            P = P - {v}
            X = X | {v}

    expand(frozenset(), set(adj), set())
    return out


def _pattern_graph(pats: Sequence[Pattern]) -> dict:
    adj = {i: set() for i in range(len(pats))}
    for i, j in combinations(range(len(pats)), 2):
        if set(pats[i].indices) & set(pats[j].indices):
            adj[i].add(j)
            adj[j].add(i)
    return adj


def _region_key(R: Region) -> tuple:
    return tuple(p.vertices for p in R.pieces)


def maximal_squares(E: SquareUnion, limit: int = DEFAULT_ATOM_LIMIT,
                    verify: bool = True, max_squares: Optional[int] = None) -> MaximalSquareSet:
    """Enumerate the maximal Cartesian squares of E, with hidden flags."""
    pats = [p for p in realizable_patterns(E, limit) if p.exact]
    cliques = bron_kerbosch(_pattern_graph(pats))
    found: dict = {}
    for F in cliques:
        B = union_regions(pats[i].intersection for i in F)
        fam = tuple(sorted(pats[i].indices for i in F))
        found.setdefault(B, fam)
    regions = sorted(found, key=_region_key)
    # a strictly smaller region can only arise from a bug, but filter defensively
    keep = [B for B in regions
            if not any(C != B and region_subset(B, C) and not region_subset(C, B) for C in regions)]
    truncated = max_squares is not None and len(keep) > max_squares
    if truncated:
        keep = keep[:max_squares]
    ms = MaximalSquareSet(tuple(keep), tuple(False for _ in keep), tuple(found[B] for B in keep))
    ms = classify_hidden(ms, E)
    if verify and not truncated:
        _verify(ms, E)
    if truncated:
        raise LimitError(f"more than {max_squares} maximal squares", partial=ms)
    return ms


def _verify(ms: MaximalSquareSet, E: SquareUnion) -> None:
    for B in ms.squares:
        if not square_subset(B, E):
            raise VerificationError(f"enumerated square {B!r} is not inside E")
    cover = union_regions(ms.squares)
    for A in E.atoms:
        if not region_subset(A, cover):
            raise VerificationError(f"atom {A!r} is not covered by the maximal squares")


def classify_hidden(ms: MaximalSquareSet, E: SquareUnion) -> MaximalSquareSet:
    flags = tuple(not any(B == A or region_equal(B, A) for A in E.atoms) for B in ms.squares)
    return replace(ms, hidden=flags)


# ---------------------------------------------------------------- square test


def point_pattern(E: SquareUnion, x: Point) -> tuple:
    return tuple(i for i, a in enumerate(E.atoms) if region_contains(a, x))


def _pairwise_meet(patterns: Iterable[tuple]) -> bool:
    pats = [set(p) for p in set(patterns)]
    return all(a & b for a, b in combinations(pats, 2))


def square_subset(B, E: SquareUnion, limit: int = DEFAULT_ATOM_LIMIT) -> bool:
    """Whether B x B lies inside E."""
    B = as_region(B)
    if B.dim != E.dim:
        raise DimensionError("dimension mismatch")
    if B.is_point_set():
        pats = [point_pattern(E, p.vertices[0]) for p in B.pieces]
        return all(pats) and _pairwise_meet(pats)
    if B.dim > 2:
        raise DimensionError("square_subset needs m <= 2 unless B is a point set")
    if not region_subset(B, E.union()):
        return False
    if E.is_discrete():
        return False  # a set with a non-point piece cannot sit inside finitely many points
    realized = []
    for p in realizable_patterns(E, limit):
        if not p.exact:
            continue
        X = intersect_regions(B, p.intersection)
        if X is not None and _escapes(X, _others(E, p.indices)):
            realized.append(p.indices)
    return _pairwise_meet(realized)


# ---------------------------------------------------------------- discrete tools


def symmetrize_diagonalize_discrete(pairs: Iterable[tuple]) -> set:
    """Largest symmetric diagonal subset of a finite relation."""
    E = {(tuple(a), tuple(b)) for a, b in pairs}
    return {(a, b) for a, b in E if (b, a) in E and (a, a) in E and (b, b) in E}


def rasterize(E: SquareUnion, g: int) -> dict:
    """Grid points of step 1/g inside U A_i, mapped to their membership patterns."""
    if E.dim > 2:
        raise DimensionError("rasterization supports m <= 2")
    step = to_q(1) / g
    pts: set = set()
    for A in E.atoms:
        for P in A.pieces:
            lo, hi = P.bbox()
            ranges = [range(math.ceil(lo[d] * g), math.floor(hi[d] * g) + 1) for d in range(E.dim)]
            if E.dim == 1:
                cand = ((k * step,) for k in ranges[0])
            else:
                cand = ((i * step, j * step) for i in ranges[0] for j in ranges[1])
            pts.update(x for x in cand if contains(P, x))
    return {x: point_pattern(E, x) for x in pts}


def grid_cliques(E: SquareUnion, g: int) -> list:
    """Maximal cliques of the 'share an atom' graph on the 1/g grid points of U A_i.

    Grid points with equal patterns are twins, so the search runs on pattern
    classes and expands each clique back to its points.
    """
    grid = rasterize(E, g)
    classes: dict = {}
    for x, S in grid.items():
        classes.setdefault(S, []).append(x)
    keys = sorted(classes)
    adj = {i: set() for i in range(len(keys))}
    for i, j in combinations(range(len(keys)), 2):
        if set(keys[i]) & set(keys[j]):
            adj[i].add(j)
            adj[j].add(i)
    out = []
    if not keys:
        return out
    for F in bron_kerbosch(adj):
        out.append(frozenset(x for i in F for x in classes[keys[i]]))
    return sorted(out, key=lambda c: sorted(c))


def grid_consistency(E: SquareUnion, ms: MaximalSquareSet, g: int) -> list:
    """Discrete cliques that are not the grid trace of any enumerated square.

    Returns a list of offending cliques (empty means consistent).
    """
    grid = rasterize(E, g)
    traces = [frozenset(x for x in grid if region_contains(B, x)) for B in ms.squares]
    bad = []
    for C in grid_cliques(E, g):
        if C not in traces:
            bad.append(C)
    return bad


def hidden_union_M(E: SquareUnion) -> Optional[Region]:
    """M_I: union of pairwise intersections A_i n A_j, i != j."""
    parts = []
    for i, j in combinations(range(E.n), 2):
        X = intersect_regions(E.atoms[i], E.atoms[j])
        if X is not None:
            parts.append(X)
    return union_regions(parts) if parts else None


def points_square(points: Iterable) -> Region:
    return Region.from_points(as_point(p) for p in points)
