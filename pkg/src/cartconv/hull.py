"""Cartesian convex hulls by stage iteration, and convexification certificates.

Stage k+1 replaces every maximal square B of stage k by its convex hull.  A
set is Cartesian convex exactly when all its maximal squares are convex, so
the iteration stops at the first stage whose maximal squares are all convex;
that stage equals its own hull step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .geometry import (
    DimensionError,
    Region,
    convex_hull,
    hull_of_region,
    region_equal,
    region_subset,
)
from .squares import (
    DEFAULT_ATOM_LIMIT,
    MaximalSquareSet,
    SquareUnion,
    maximal_squares,
    square_subset,
)

DEFAULT_MAX_ITER = 16


def region_is_convex(B: Region) -> bool:
    if len(B.pieces) == 1:
        return True
    return region_subset(Region.single(hull_of_region(B)), B)


def set_subset(E: SquareUnion, F: SquareUnion) -> bool:
    """Whether U A_i^2 (E) lies inside U A_j^2 (F)."""
    return all(square_subset(A, F) for A in E.atoms)


def set_equal(E: SquareUnion, F: SquareUnion) -> bool:
    return set_subset(E, F) and set_subset(F, E)


def _step_from(ms: MaximalSquareSet, provenance: str) -> SquareUnion:
    return SquareUnion.build([hull_of_region(B) for B in ms.squares], provenance=provenance)


def hull_step(E: SquareUnion, limit: int = DEFAULT_ATOM_LIMIT, verify: bool = True) -> SquareUnion:
    ms = maximal_squares(E, limit=limit, verify=verify)
    return _step_from(ms, "hull-step")


@dataclass
class HullTrace:
    stages: list
    squares: list = field(default_factory=list)  # maximal squares of each computed stage
    fixpoint_reached: bool = False

    @property
    def iterations(self) -> int:
        """Number of productive steps (stages added beyond the input)."""
        return len(self.stages) - 1

    @property
    def last(self) -> SquareUnion:
        return self.stages[-1]

    @property
    def final_squares(self) -> MaximalSquareSet:
        return self.squares[-1]


def cartesian_hull(E: SquareUnion, max_iter: int = DEFAULT_MAX_ITER,
                   limit: int = DEFAULT_ATOM_LIMIT, verify: bool = True) -> HullTrace:
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    trace = HullTrace(stages=[E])
    while True:
        ms = maximal_squares(trace.last, limit=limit, verify=verify)
        trace.squares.append(ms)
        if all(region_is_convex(B) for B in ms.squares):
            trace.fixpoint_reached = True
            return trace
        if trace.iterations >= max_iter:
            return trace
        trace.stages.append(_step_from(ms, f"hull-stage {trace.iterations + 1}"))


def is_cartesian_convex(E: SquareUnion, limit: int = DEFAULT_ATOM_LIMIT) -> bool:
    return all(region_is_convex(B) for B in maximal_squares(E, limit=limit).squares)


def nonconvex_square(E: SquareUnion, limit: int = DEFAULT_ATOM_LIMIT) -> Optional[Region]:
    for B in maximal_squares(E, limit=limit).squares:
        if not region_is_convex(B):
            return B
    return None


@dataclass
class BasicCertificate:
    basic: bool
    witness: Optional[Region]
    stage1: SquareUnion
    squares0: MaximalSquareSet
    squares1: MaximalSquareSet
    single_step: Optional[bool] = None  # hull settles at stage 1 (checked when basic)


def has_basic_convexification(E: SquareUnion, limit: int = DEFAULT_ATOM_LIMIT) -> BasicCertificate:
    """Check that every maximal square of E_1 is the hull of a maximal square of E."""
    ms0 = maximal_squares(E, limit=limit)
    E1 = _step_from(ms0, "hull-stage 1")
    ms1 = maximal_squares(E1, limit=limit)
    hulls = [Region.single(hull_of_region(B)) for B in ms0.squares]
    witness = None
    for D in ms1.squares:
        if not any(D == H or region_equal(D, H) for H in hulls):
            witness = D
            break
    cert = BasicCertificate(witness is None, witness, E1, ms0, ms1)
    if cert.basic:
        cert.single_step = all(region_is_convex(D) for D in ms1.squares)
        if not cert.single_step:
            raise AssertionError("basic convexification without a one-step hull")
    return cert


def separate_hull_1d(E: SquareUnion) -> SquareUnion:
    """Union of [a, b]^2 over pairs (a, b) in E, for scalar E."""
    if E.dim != 1:
        raise DimensionError("separate hull is defined here for m = 1")
    atoms = []
    for A in E.atoms:
        vs = A.vertices()
        atoms.append(convex_hull([vs[0], vs[-1]]))
    return SquareUnion.build(atoms, provenance="separate-hull")
