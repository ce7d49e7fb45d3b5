"""Embedded caterpillars: backbone path, leaves, and rotation system.

The embedding is combinatorial data, not geometry: every node stores the
counterclockwise cyclic order of its neighbors, and a placement is only a
faithful realization if the geometric angular order around each disk matches
the stored one (up to cyclic rotation, never reflection).

Fragments are caterpillars with open splice slots.  A slot is written into
the rotation list of the first/last backbone node as the sentinel ``@entry``
or ``@exit``; splicing replaces the sentinels of both sides with the actual
neighbor ids, so the cyclic position of the joint is fixed by the author of
the fragment, exactly like every other embedding choice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

ENTRY = "@entry"
EXIT = "@exit"
_SENTINELS = (ENTRY, EXIT)


class SchemaError(ValueError):
    """Malformed caterpillar/placement/template document."""


class PortError(ValueError):
    """Splice attempted on a missing or occupied port."""


@dataclass(frozen=True)
class Violation:
    kind: str
    node: str
    detail: str = ""

    def __str__(self):
        return f"{self.kind}({self.node}){': ' + self.detail if self.detail else ''}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, node: str, detail: str = ""):
        self.violations.append(Violation(kind, node, detail))


class EmbeddedCaterpillar:
    """A caterpillar tree with a fixed rotation system.

    backbone: ordered node ids of the internal path
    leaves:   backbone id -> list of leaf ids hanging off it
    rotation: node id -> cyclic counterclockwise list of its neighbors
              (may contain the @entry/@exit sentinels on port nodes of
              fragments; a closed caterpillar has none)
    """

    def __init__(self, backbone, leaves, rotation):
        self.backbone = list(backbone)
        self.leaves = {b: list(ls) for b, ls in leaves.items() if ls}
        self.rotation = {n: list(r) for n, r in rotation.items()}

    # -- structure ---------------------------------------------------------

    def nodes(self) -> list[str]:
        out = []
        for b in self.backbone:
            out.append(b)
            out.extend(self.leaves.get(b, ()))
        return out

    def edges(self):
        for a, b in zip(self.backbone, self.backbone[1:]):
            yield (a, b)
        for b in self.backbone:
            for leaf in self.leaves.get(b, ()):
                yield (b, leaf)

    def neighbors_of(self, node: str) -> list[str]:
        return [x for x in self.rotation.get(node, ()) if x not in _SENTINELS]

    def adjacency(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {n: [] for n in self.nodes()}
        for a, b in self.edges():
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def degree(self, node: str) -> int:
        return len(self.rotation.get(node, ()))

    def node_count(self) -> int:
        return len(self.backbone) + sum(len(v) for v in self.leaves.values())

    # -- validation --------------------------------------------------------

    def validate(self, allow_ports: bool = False) -> ValidationReport:
        report = ValidationReport()
        seen: set[str] = set()
        for n in self.nodes():
            if n in seen:
                report.add("DuplicateNode", n)
            seen.add(n)
        if not self.backbone:
            report.add("EmptyBackbone", "")
            return report

        adj = self.adjacency()
        backbone_set = set(self.backbone)
        for b in self.leaves:
            if b not in backbone_set:
                report.add("OrphanLeafHost", b, "leaves attached to non-backbone node")

        for n in seen:
            rot = self.rotation.get(n)
            if rot is None:
                report.add("RotationViolation", n, "missing rotation")
                continue
            ports = [x for x in rot if x in _SENTINELS]
            if ports and not allow_ports:
                report.add("RotationViolation", n, "splice sentinel in closed caterpillar")
            real = [x for x in rot if x not in _SENTINELS]
            if sorted(real) != sorted(adj[n]):
                report.add("RotationViolation", n, "rotation does not list the neighbors")
            if len(rot) > 6:
                report.add("DegreeViolation", n, f"degree {len(rot)} > 6")

        # Caterpillar shape: interior nodes (the backbone) form a path; every
        # non-backbone node is a leaf of degree 1.
        for i, b in enumerate(self.backbone):
            expected = (1 if len(self.backbone) > 1 else 0) + (1 if 0 < i < len(self.backbone) - 1 else 0)
            internal = [x for x in adj[b] if x in backbone_set]
            if len(internal) != expected:
                report.add("BackboneViolation", b, "backbone is not a simple path")
        for b in self.backbone:
            for leaf in self.leaves.get(b, ()):
                if len(adj[leaf]) != 1:
                    report.add("LeafViolation", leaf, "leaf degree != 1")
        return report

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "backbone": list(self.backbone),
            "leaves": {b: list(ls) for b, ls in sorted(self.leaves.items())},
            "rotation": {n: list(r) for n, r in sorted(self.rotation.items())},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc) -> "EmbeddedCaterpillar":
        if not isinstance(doc, dict):
            raise SchemaError("caterpillar document must be an object")
        for key in ("backbone", "leaves", "rotation"):
            if key not in doc:
                raise SchemaError(f"missing key {key!r}")
        cat = cls(doc["backbone"], doc["leaves"], doc["rotation"])
        seen = set()
        for n in cat.nodes():
            if n in seen:
                raise SchemaError(f"duplicate node id {n!r}")
            seen.add(n)
        for n, rot in cat.rotation.items():
            if n not in seen:
                raise SchemaError(f"rotation for unknown node {n!r}")
            for x in rot:
                if x not in seen and x not in _SENTINELS:
                    raise SchemaError(f"rotation of {n!r} names unknown node {x!r}")
        return cat

    @classmethod
    def loads(cls, text: str) -> "EmbeddedCaterpillar":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc
        return cls.from_json_dict(doc)

    def structurally_equal(self, other: "EmbeddedCaterpillar") -> bool:
        return self.to_json_dict() == other.to_json_dict()


class Fragment(EmbeddedCaterpillar):
    """Caterpillar fragment with optional entry/exit splice slots."""

    @property
    def entry_node(self) -> str | None:
        b = self.backbone[0]
        return b if ENTRY in self.rotation.get(b, ()) else None

    @property
    def exit_node(self) -> str | None:
        b = self.backbone[-1]
        return b if EXIT in self.rotation.get(b, ()) else None

    def validate(self, allow_ports: bool = True) -> ValidationReport:
        report = super().validate(allow_ports=True)
        for n, rot in self.rotation.items():
            for s in _SENTINELS:
                if rot.count(s) > 1:
                    report.add("PortViolation", n, f"{s} appears twice")
            if ENTRY in rot and n != self.backbone[0]:
                report.add("PortViolation", n, "@entry off the first backbone node")
            if EXIT in rot and n != self.backbone[-1]:
                report.add("PortViolation", n, "@exit off the last backbone node")
        return report

    def renamed(self, prefix: str) -> "Fragment":
        """Copy with every node id namespaced under prefix."""
        ren = lambda x: x if x in _SENTINELS else f"{prefix}{x}"
        return Fragment(
            [ren(b) for b in self.backbone],
            {ren(b): [ren(x) for x in ls] for b, ls in self.leaves.items()},
            {ren(n): [ren(x) for x in r] for n, r in self.rotation.items()},
        )


def splice(a: Fragment, b: Fragment) -> Fragment:
    """Join two fragments with one backbone edge through their open ports."""
    if a.exit_node is None:
        raise PortError("left fragment has no open @exit port")
    if b.entry_node is None:
        raise PortError("right fragment has no open @entry port")
    overlap = set(a.nodes()) & set(b.nodes())
    if overlap:
        raise PortError(f"fragments share node ids: {sorted(overlap)[:3]}")
    tail, head = a.exit_node, b.entry_node
    rotation = {n: list(r) for n, r in a.rotation.items()}
    rotation.update({n: list(r) for n, r in b.rotation.items()})
    rotation[tail] = [head if x == EXIT else x for x in rotation[tail]]
    rotation[head] = [tail if x == ENTRY else x for x in rotation[head]]
    leaves = {n: list(ls) for n, ls in a.leaves.items()}
    for n, ls in b.leaves.items():
        leaves.setdefault(n, []).extend(ls)
    return Fragment(a.backbone + b.backbone, leaves, rotation)


def splice_all(fragments) -> Fragment:
    out = None
    for frag in fragments:
        out = frag if out is None else splice(out, frag)
    if out is None:
        raise PortError("nothing to splice")
    return out
