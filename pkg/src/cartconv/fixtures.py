"""Named scenes used by the CLI, the self-test and the test-suite.

G1  three segments meeting pairwise but with no common point
G2  the G1 segments thickened by 1/10 in the max-norm (convex polygons)
G3  the G1 segment endpoints as two-point atoms
G2L, G2M, G2R  four-set configurations (G1 plus a fourth line, and a
    variant with two parallel segments)
"""
from __future__ import annotations

from .geometry import Region, as_point, convex_hull, inflate, segment
from .squares import SquareUnion

H = "1/2"
SEG1 = ((1, 2), ("-1/2", -1))
SEG2 = ((-1, 2), (H, -1))
SEG3 = (("3/2", 1), ("-3/2", 1))

G2_THICKNESS = "1/10"


def _segs(*pairs) -> list:
    return [segment(a, b) for a, b in pairs]


def g1() -> SquareUnion:
    return SquareUnion.build(_segs(SEG1, SEG2, SEG3), provenance="input:G1")


def g2() -> SquareUnion:
    return SquareUnion.build([inflate(s, G2_THICKNESS) for s in _segs(SEG1, SEG2, SEG3)],
                             provenance="input:G2")


def g3() -> SquareUnion:
    return SquareUnion.build([Region.from_points(pair) for pair in (SEG1, SEG2, SEG3)],
                             provenance="input:G3")


def g2l() -> SquareUnion:
    # fourth line y = 2x/5 + 3/5 crosses every other segment at a distinct point
    seg4 = (("-13/10", "2/25"), ("3/2", "6/5"))
    return SquareUnion.build(_segs(SEG1, SEG2, SEG3, seg4), provenance="input:G2L")


def g2m() -> SquareUnion:
    # fourth segment parallel to A3
    seg4 = (("-3/2", H), ("3/2", H))
    return SquareUnion.build(_segs(SEG1, SEG2, SEG3, seg4), provenance="input:G2M")


def g2r() -> SquareUnion:
    # two parallel rising segments crossed by two parallel horizontal ones
    segs = ((("-1/2", -1), (1, 2)), ((-1, -1), (H, 2)), SEG3, (("-3/2", H), ("3/2", H)))
    return SquareUnion.build(_segs(*segs), provenance="input:G2R")


FIXTURES = {"G1": g1, "G2": g2, "G3": g3, "G2L": g2l, "G2M": g2m, "G2R": g2r}

# expected maximal-square counts (total, hidden)
EXPECTED_COUNTS = {"G1": (4, 1), "G2": (4, 1), "G3": (3, 0),
                   "G2L": (8, 4), "G2M": (6, 2), "G2R": (4, 0)}


def fixture(name: str) -> SquareUnion:
    try:
        return FIXTURES[name.upper()]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None


def m_points() -> Region:
    """The three pairwise intersection points of the G1 segments."""
    return Region.from_points([as_point((0, 0)), as_point((H, 1)), as_point(("-1/2", 1))])


def m_triangle():
    return convex_hull(m_points().vertices())
