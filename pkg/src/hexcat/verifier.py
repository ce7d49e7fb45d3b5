"""Decide whether a placement is a weak unit-disk contact representation.

Checks, in order: every node placed (V1); adjacent disks touch (V2); all
disk interiors disjoint (V3), with touching non-adjacent pairs collected as
informational weak contacts, never failures; and the counterclockwise
angular order of every node's placed neighbors is a cyclic rotation of the
stored rotation (V4) -- rotations, never reflections.

Exact mode works on integer lattice coordinates with integer predicates.
Tolerant mode accepts arbitrary real coordinates and an epsilon; distances
within [2-eps, 2+eps] count as touching for both adjacency and disjointness.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

from .hexlattice import SQRT3, ccw_compare

_OVERLAP_OFFSETS = ((0, 0), (1, 0), (-1, 0))
_TOUCH_OFFSETS = ((2, 0), (-2, 0), (1, 1), (-1, 1), (1, -1), (-1, -1))


@dataclass(frozen=True)
class Violation:
    kind: str      # MissingNode | AdjacencyGap | Overlap | RotationMismatch | DegenerateDirection
    nodes: tuple
    measured: float | None = None

    def to_json_dict(self):
        return {"kind": self.kind, "nodes": list(self.nodes), "measured": self.measured}


@dataclass
class VerificationReport:
    violations: list[Violation] = field(default_factory=list)
    weak_contacts: list[tuple] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def verdict(self) -> str:
        return "pass" if self.ok else "fail"

    def add(self, kind, nodes, measured=None):
        self.violations.append(Violation(kind, tuple(nodes), measured))

    def to_json_dict(self):
        return {
            "verdict": self.verdict,
            "violations": [v.to_json_dict() for v in self.violations],
            "weak_contacts": [list(p) for p in self.weak_contacts],
        }


class DegenerateDirection(ValueError):
    """Two neighbors of one disk lie in exactly the same direction."""


def neighbor_angles(center, points):
    """Sort points counterclockwise (from +x) as seen from center.

    Points are (u, v) lattice pairs compared with exact integer cross
    products on (du, dv*sqrt(3)); no floating point is involved.
    """
    dirs = []
    for p in points:
        d = (p[0] - center[0], p[1] - center[1])
        if d == (0, 0):
            raise DegenerateDirection(f"point {p} coincides with center")
        dirs.append((d, p))
    for i in range(len(dirs)):
        for j in range(i + 1, len(dirs)):
            a, b = dirs[i][0], dirs[j][0]
            if ccw_compare(a, b) == 0:
                raise DegenerateDirection(f"{dirs[i][1]} and {dirs[j][1]} share a direction")
    ordered = sorted(dirs, key=functools.cmp_to_key(lambda x, y: ccw_compare(x[0], y[0])))
    return [p for _, p in ordered]


def _neighbor_angles_real(center, points):
    out = []
    for p in points:
        dx = p[0] - center[0]
        dy = p[1] - center[1]
        if dx == 0.0 and dy == 0.0:
            raise DegenerateDirection(f"point {p} coincides with center")
        out.append((math.atan2(dy, dx) % (2 * math.pi), p))
    out.sort(key=lambda t: t[0])
    for (a1, p1), (a2, p2) in zip(out, out[1:]):
        if a1 == a2:
            raise DegenerateDirection(f"{p1} and {p2} share a direction")
    return [p for _, p in out]


def is_cyclic_rotation(seq, ref) -> bool:
    """True iff seq is a cyclic rotation (not reflection) of ref."""
    if len(seq) != len(ref):
        return False
    if not seq:
        return True
    n = len(ref)
    try:
        starts = [i for i, x in enumerate(ref) if x == seq[0]]
    except TypeError:
        return False
    for s in starts:
        if all(ref[(s + k) % n] == seq[k] for k in range(n)):
            return True
    return False


def restrict_cycle(cycle, keep) -> list:
    keep = set(keep)
    return [x for x in cycle if x in keep]


def verify(cat, placement, mode: str = "exact", eps: float = 1e-9) -> VerificationReport:
    """Full weak-UDCR check of placement against the embedded caterpillar."""
    if mode not in ("exact", "tolerant"):
        raise ValueError(f"unknown mode {mode!r}")
    report = VerificationReport()
    nodes = cat.nodes()

    placed = {}
    for n in nodes:
        if n in placement and placement[n] is not None:
            placed[n] = tuple(placement[n])
        else:
            report.add("MissingNode", (n,))

    # V2: adjacent disks touch.
    for a, b in cat.edges():
        if a not in placed or b not in placed:
            continue
        if mode == "exact":
            d2 = _sq(placed[a], placed[b])
            if d2 != 4:
                report.add("AdjacencyGap", (a, b), measured=math.sqrt(d2))
        else:
            d = _dist_real(placed[a], placed[b])
            if abs(d - 2.0) > eps:
                report.add("AdjacencyGap", (a, b), measured=d)

    # V3: pairwise disjoint interiors; collect weak contacts.
    edge_set = {frozenset(e) for e in cat.edges()}
    if mode == "exact":
        _pairs_exact(placed, edge_set, report)
    else:
        _pairs_tolerant(placed, edge_set, eps, report)

    # V4: rotation system preserved.
    angle_fn = neighbor_angles if mode == "exact" else _neighbor_angles_real
    for n in nodes:
        if n not in placed:
            continue
        rot = cat.neighbors_of(n)
        placed_nbrs = [x for x in rot if x in placed]
        if len(placed_nbrs) < 2:
            continue
        pts = {placed[x]: x for x in placed_nbrs}
        try:
            ordered_pts = angle_fn(placed[n], [placed[x] for x in placed_nbrs])
        except DegenerateDirection:
            report.add("DegenerateDirection", (n,))
            continue
        geometric = [pts[p] for p in ordered_pts]
        stored = restrict_cycle(rot, placed_nbrs)
        if not is_cyclic_rotation(geometric, stored):
            report.add("RotationMismatch", (n,))

    report.weak_contacts.sort()
    return report


def _sq(p, q) -> int:
    du = p[0] - q[0]
    dv = p[1] - q[1]
    return du * du + 3 * dv * dv


def _dist_real(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def _pairs_exact(placed, edge_set, report):
    occupied: dict[tuple, list] = {}
    for n, p in placed.items():
        occupied.setdefault(p, []).append(n)
    for p, names in occupied.items():
        if len(names) > 1:
            names = sorted(names)
            for i in range(1, len(names)):
                report.add("Overlap", (names[0], names[i]), measured=0.0)
    seen = set()
    for n, p in sorted(placed.items()):
        for du, dv in _OVERLAP_OFFSETS[1:]:
            q = (p[0] + du, p[1] + dv)
            for other in occupied.get(q, ()):  # distance 1 < 2: overlap
                pair = frozenset((n, other))
                if pair not in seen:
                    seen.add(pair)
                    report.add("Overlap", tuple(sorted(pair)), measured=1.0)
        for du, dv in _TOUCH_OFFSETS:
            q = (p[0] + du, p[1] + dv)
            for other in occupied.get(q, ()):
                pair = frozenset((n, other))
                if pair in seen or pair in edge_set:
                    continue
                seen.add(pair)
                report.weak_contacts.append(tuple(sorted(pair)))


def _pairs_tolerant(placed, edge_set, eps, report):
    cell = 2.0 + eps
    grid: dict[tuple, list] = {}
    for n, p in placed.items():
        key = (math.floor(p[0] / cell), math.floor(p[1] / cell))
        grid.setdefault(key, []).append(n)
    seen = set()
    for (cx, cy), names in grid.items():
        candidates = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                candidates.extend(grid.get((cx + dx, cy + dy), ()))
        for n in names:
            for other in candidates:
                if other == n:
                    continue
                pair = frozenset((n, other))
                if pair in seen:
                    continue
                seen.add(pair)
                d = _dist_real(placed[n], placed[other])
                if d < 2.0 - eps:
                    report.add("Overlap", tuple(sorted(pair)), measured=d)
                elif d <= 2.0 + eps and pair not in edge_set:
                    report.weak_contacts.append(tuple(sorted(pair)))


def placement_to_json_dict(placement) -> dict:
    return {n: [p[0], p[1]] for n, p in sorted(placement.items())}


def placement_from_json_dict(doc) -> dict:
    from .caterpillar import SchemaError

    if not isinstance(doc, dict):
        raise SchemaError("placement document must be an object")
    out = {}
    for n, p in doc.items():
        if not isinstance(p, (list, tuple)) or len(p) != 2:
            raise SchemaError(f"placement of {n!r} must be a [u, v] pair")
        out[n] = (p[0], p[1])
    return out
