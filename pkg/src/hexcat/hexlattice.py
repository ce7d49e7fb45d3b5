"""Exact arithmetic on the hexagonal disk lattice.

Unit disks (radius 1) are centered on the triangular lattice embedded as
x = u, y = v*sqrt(3), with the parity constraint u == v (mod 2).  Two disk
centers touch exactly when the squared distance (du)^2 + 3*(dv)^2 equals 4,
which happens for the six step vectors below and for no other offsets.
All predicates stay in integers; nothing here ever rounds.
"""

from __future__ import annotations

import math
from typing import Iterator, NamedTuple

SQRT3 = math.sqrt(3.0)


class Pt(NamedTuple):
    """Lattice point (u, v) with u == v (mod 2)."""

    u: int
    v: int

    def __add__(self, other):  # type: ignore[override]
        return Pt(self.u + other[0], self.v + other[1])

    def __sub__(self, other):
        return Pt(self.u - other[0], self.v - other[1])

    def __neg__(self):
        return Pt(-self.u, -self.v)


#: Step vectors to the six touching neighbors, counterclockwise from +x.
DIRS = (
    Pt(2, 0),
    Pt(1, 1),
    Pt(-1, 1),
    Pt(-2, 0),
    Pt(-1, -1),
    Pt(1, -1),
)


class BadLatticePoint(ValueError):
    """Coordinates violate the u == v (mod 2) parity constraint."""


def check_parity(p) -> Pt:
    p = Pt(int(p[0]), int(p[1]))
    if (p.u - p.v) % 2 != 0:
        raise BadLatticePoint(f"({p.u}, {p.v}) is not on the lattice")
    return p


def to_cartesian(p) -> tuple[float, float]:
    """Map a lattice point to its disk-center coordinates."""
    return (float(p[0]), p[1] * SQRT3)


def squared_distance(p, q) -> int:
    """Exact squared Euclidean distance; 4 means the disks touch."""
    du = p[0] - q[0]
    dv = p[1] - q[1]
    return du * du + 3 * dv * dv


def touches(p, q) -> bool:
    return squared_distance(p, q) == 4


def rotate_dir(k: int, steps: int) -> int:
    return (k + steps) % 6


def rotate60(p, center=Pt(0, 0), steps: int = 1) -> Pt:
    """Rotate p about center by steps*60 degrees counterclockwise.

    One step maps the offset (u, v) to ((u - 3v)/2, (u + v)/2); the parity
    constraint makes both halves integers.
    """
    u = p[0] - center[0]
    v = p[1] - center[1]
    for _ in range(steps % 6):
        u, v = (u - 3 * v) // 2, (u + v) // 2
    return Pt(u + center[0], v + center[1])


def neighbors(p) -> list[Pt]:
    """The six touching positions, counterclockwise from +x."""
    return [Pt(p[0] + d.u, p[1] + d.v) for d in DIRS]


class Pose(NamedTuple):
    """Anchor for placing gadget templates: a point plus a facing direction."""

    at: Pt
    facing: int  # index into DIRS

    def step(self) -> Pt:
        return DIRS[self.facing]


def transform(p, pose: Pose) -> Pt:
    """Map template-local coordinates (authored facing DIRS[0]) to pose."""
    q = rotate60(Pt(p[0], p[1]), Pt(0, 0), pose.facing)
    return Pt(q.u + pose.at[0], q.v + pose.at[1])


def transform_pose(local: Pose, pose: Pose) -> Pose:
    return Pose(transform(local.at, pose), rotate_dir(local.facing, pose.facing))


class Box(NamedTuple):
    """Inclusive lattice bounding box."""

    umin: int
    vmin: int
    umax: int
    vmax: int

    def contains(self, p) -> bool:
        return self.umin <= p[0] <= self.umax and self.vmin <= p[1] <= self.vmax

    def expand(self, margin: int) -> "Box":
        return Box(self.umin - margin, self.vmin - margin,
                   self.umax + margin, self.vmax + margin)

    def points(self) -> Iterator[Pt]:
        for v in range(self.vmin, self.vmax + 1):
            for u in range(self.umin, self.umax + 1):
                if (u - v) % 2 == 0:
                    yield Pt(u, v)


def bounding_box(points) -> Box:
    us = [p[0] for p in points]
    vs = [p[1] for p in points]
    return Box(min(us), min(vs), max(us), max(vs))


def direction_sort_key(d):
    """Total order on nonzero directions, counterclockwise from angle 0.

    Works on the exact pair (du, dv): the true direction is (du, dv*sqrt(3)),
    and sign comparisons of cross products carry over unchanged.
    """
    du, dv = d[0], d[1]
    if du == 0 and dv == 0:
        raise ValueError("zero direction has no angle")
    upper = dv > 0 or (dv == 0 and du > 0)
    return (0 if upper else 1, du, dv)


def ccw_compare(a, b) -> int:
    """-1, 0, +1 as direction a comes before, with, or after b going CCW from +x."""
    ha = 0 if (a[1] > 0 or (a[1] == 0 and a[0] > 0)) else 1
    hb = 0 if (b[1] > 0 or (b[1] == 0 and b[0] > 0)) else 1
    if ha != hb:
        return -1 if ha < hb else 1
    cross = a[0] * b[1] - b[0] * a[1]
    if cross > 0:
        return -1
    if cross < 0:
        return 1
    return 0
