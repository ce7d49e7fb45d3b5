"""Gadget template library: caterpillar fragments plus per-state geometry.

Every template couples a fragment (combinatorial data: nodes, rotations,
open ports) with one lattice placement per discrete state, authored in a
canonical frame where the entry disk sits at (0, 0) and the path travels
along +x.  Templates are accepted into the library only if they pass two
machine checks, which the test suite runs for each of them:

* soundness: every stored state placement passes exact verification;
* completeness: the oracle's anchored search finds exactly the declared
  states and nothing else.

The leaf patterns come from the locally-optimal-packing idea: a straight
run node carries two flank leaves placed to pin its successor's cell, a
turn node carries them rotated, and a node with a full six-neighborhood is
immovable relative to its neighbors.  A switch joint reparents one flank
leaf to the following node, which leaves that node exactly two legal cells;
everything downstream of the joint rides along, so one joint turns a rigid
tail into a two-position slider.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .caterpillar import ENTRY, EXIT, Fragment, SchemaError
from .hexlattice import DIRS, Box, Pose, Pt, bounding_box, rotate_dir, transform, transform_pose


class CapacityError(ValueError):
    """More connector ports requested than the hexagon chain offers."""


# ---------------------------------------------------------------------------
# builder


class FragmentBuilder:
    """Emits backbone nodes with leaves, rotations, and per-state geometry.

    Keeps one cursor pose per state; ops advance all cursors in lockstep
    until a switch op makes them diverge.  Rotation lists are authored
    counterclockwise with a successor placeholder that is patched when the
    next backbone node appears (or turned into the @exit sentinel).
    """

    SUCC = "@succ"

    def __init__(self, states=("fixed",), prefix="", entry=True, start=None):
        self.state_names = list(states)
        start = start or Pose(Pt(0, 0), 0)
        self.cursor = {s: start for s in self.state_names}
        self.prefix = prefix
        self.backbone: list[str] = []
        self.leaves: dict[str, list[str]] = {}
        self.rotation: dict[str, list[str]] = {}
        self.pos: dict[str, dict[str, Pt]] = {s: {} for s in self.state_names}
        self._n = 0
        self._entry_open = entry
        self.ports: dict[str, dict[str, Pose]] = {}

    # -- low level ----------------------------------------------------------

    def _name(self, stem):
        self._n += 1
        return f"{self.prefix}{stem}{self._n}"

    def _leaf(self, host, stem, positions):
        name = f"{host}.{stem}"
        self.leaves.setdefault(host, []).append(name)
        self.rotation[name] = [host]
        for s in self.state_names:
            self.pos[s][name] = positions[s]
        return name

    def add_backbone(self, stem, positions, rot_builder):
        """positions: state -> Pt for the node.  rot_builder(name) returns
        the ccw rotation list containing SUCC and already-created leaves."""
        name = self._name(stem)
        if self.backbone:
            prev = self.backbone[-1]
            self.rotation[prev] = [name if x == self.SUCC else x for x in self.rotation[prev]]
        self.backbone.append(name)
        for s in self.state_names:
            self.pos[s][name] = positions[s]
        self.rotation[name] = rot_builder(name)
        return name

    def _advance(self, state, step_dir=None):
        c = self.cursor[state]
        d = DIRS[c.facing if step_dir is None else step_dir]
        return Pose(Pt(c.at.u + d.u, c.at.v + d.v), c.facing)

    def _pred_token(self):
        # called from inside add_backbone, after the node joined the backbone
        return ENTRY if (len(self.backbone) <= 1 and self._entry_open) else "@pred"

    def _fix_pred(self, rot, name):
        """Replace the @pred placeholder with the previous backbone node."""
        if "@pred" in rot:
            prev = self.backbone[-2] if self.backbone[-1] == name else self.backbone[-1]
            return [prev if x == "@pred" else x for x in rot]
        return rot

    # -- standard pieces -----------------------------------------------------

    def straight(self, count=1, flanks="both"):
        """Straight run nodes; flank leaves pin the successor's cell."""
        for _ in range(count):
            positions = {s: self.cursor[s].at for s in self.state_names}

            def rot(name):
                # ccw from pred at f+3: right flank f-1, succ f, left flank f+1
                entries = [self._pred_token()]
                if flanks in ("both", "right"):
                    r = self._leaf(name, "r", {s: self.cursor[s].at + DIRS[rotate_dir(self.cursor[s].facing, -1)]
                                               for s in self.state_names})
                    entries.append(r)
                entries.append(self.SUCC)
                if flanks in ("both", "left"):
                    l = self._leaf(name, "l", {s: self.cursor[s].at + DIRS[rotate_dir(self.cursor[s].facing, 1)]
                                               for s in self.state_names})
                    entries.append(l)
                return self._fix_pred(entries, name)

            name = self.add_backbone("s", positions, rot)
            for s in self.state_names:
                self.cursor[s] = self._advance(s)
        return self

    def turn(self, side, leaves="ab"):
        """Turn node: exit facing = entry facing +60 (left) or -60 (right).

        The two default leaves pack the inner shoulder so the turn is
        locally forced; pass a subset when neighboring structure either
        provides the bracing or needs the cells.
        """
        if side not in ("left", "right"):
            raise ValueError(side)
        positions = {s: self.cursor[s].at for s in self.state_names}

        def rot(name):
            f = {s: self.cursor[s].facing for s in self.state_names}
            entries = [self._pred_token()]
            if side == "left":
                if "a" in leaves:
                    entries.append(self._leaf(name, "a", {s: positions[s] + DIRS[rotate_dir(f[s], -1)] for s in f}))
                if "b" in leaves:
                    entries.append(self._leaf(name, "b", {s: positions[s] + DIRS[f[s]] for s in f}))
                entries.append(self.SUCC)
                return self._fix_pred(entries, name)
            entries.append(self.SUCC)
            if "b" in leaves:
                entries.append(self._leaf(name, "b", {s: positions[s] + DIRS[f[s]] for s in f}))
            if "a" in leaves:
                entries.append(self._leaf(name, "a", {s: positions[s] + DIRS[rotate_dir(f[s], 1)] for s in f}))
            return self._fix_pred(entries, name)

        name = self.add_backbone("t", positions, rot)
        steps = 1 if side == "left" else -1
        for s in self.state_names:
            c = self.cursor[s]
            nf = rotate_dir(c.facing, steps)
            self.cursor[s] = Pose(c.at + DIRS[nf], nf)
        return self

    def switch(self, kink, kinked_states, follower="rlf", joint_flank=True):
        """Two-position joint: reparent one flank leaf to the next node.

        kink 'left' shifts the kinked states one step toward facing+60,
        'right' toward facing-60; all later geometry rides along.  Emits the
        joint node (single remaining flank) and the follower node carrying
        the reparented leaf; `follower` selects which of its leaves (right
        flank, left flank, reparented) to keep when surrounding structure
        wants the cells.
        """
        if kink not in ("left", "right"):
            raise ValueError(kink)
        kinked = set(kinked_states)
        unknown = kinked - set(self.state_names)
        if unknown:
            raise ValueError(f"unknown states {unknown}")

        jpos = {s: self.cursor[s].at for s in self.state_names}
        f0 = {s: self.cursor[s].facing for s in self.state_names}

        def jrot(name):
            if kink == "left":
                entries = [self._pred_token()]
                if joint_flank:
                    entries.append(self._leaf(name, "r", {s: jpos[s] + DIRS[rotate_dir(f0[s], -1)] for s in f0}))
                entries.append(self.SUCC)
                return self._fix_pred(entries, name)
            entries = [self._pred_token(), self.SUCC]
            if joint_flank:
                entries.append(self._leaf(name, "l", {s: jpos[s] + DIRS[rotate_dir(f0[s], 1)] for s in f0}))
            return self._fix_pred(entries, name)

        self.add_backbone("j", jpos, jrot)

        # follower position: straight step, or the kink step in kinked states
        fpos = {}
        for s in self.state_names:
            step = rotate_dir(f0[s], (1 if kink == "left" else -1)) if s in kinked else f0[s]
            fpos[s] = jpos[s] + DIRS[step]

        def frot(name):
            f = f0
            entries = [self._pred_token()]
            flip = None
            if "f" in follower:
                flip = self._leaf(name, "f", {s: fpos[s] + DIRS[rotate_dir(f[s], 2 if kink == "left" else -2)]
                                              for s in f})
            if kink == "left":
                if "r" in follower:
                    entries.append(self._leaf(name, "r", {s: fpos[s] + DIRS[rotate_dir(f[s], -1)] for s in f}))
                entries.append(self.SUCC)
                if "l" in follower:
                    entries.append(self._leaf(name, "l", {s: fpos[s] + DIRS[rotate_dir(f[s], 1)] for s in f}))
                if flip:
                    entries.append(flip)
                return self._fix_pred(entries, name)
            if flip:
                entries.append(flip)
            if "r" in follower:
                entries.append(self._leaf(name, "r", {s: fpos[s] + DIRS[rotate_dir(f[s], -1)] for s in f}))
            entries.append(self.SUCC)
            if "l" in follower:
                entries.append(self._leaf(name, "l", {s: fpos[s] + DIRS[rotate_dir(f[s], 1)] for s in f}))
            return self._fix_pred(entries, name)

        self.add_backbone("w", fpos, frot)
        for s in self.state_names:
            self.cursor[s] = Pose(fpos[s] + DIRS[f0[s]], f0[s])
        return self

    def cap(self):
        """Terminal node with five leaves: a self-locking backbone end.

        The predecessor arrives from facing+3, so the leaves take the other
        five cells (straight ahead and the four diagonals)."""
        positions = {s: self.cursor[s].at for s in self.state_names}

        def rot(name):
            f = {s: self.cursor[s].facing for s in self.state_names}
            ls = {k: self._leaf(name, f"c{k}", {s: positions[s] + DIRS[rotate_dir(f[s], k)] for s in f})
                  for k in (0, 1, 2, 4, 5)}
            # ccw from pred at f+3: f+4, f+5, f, f+1, f+2
            return self._fix_pred([self._pred_token(), ls[4], ls[5], ls[0], ls[1], ls[2]], name)

        self.add_backbone("e", positions, rot)
        for s in self.state_names:
            self.cursor[s] = None
        return self

    def head(self):
        """Opening node with five leaves (only legal as the first node)."""
        if self.backbone or self._entry_open:
            raise ValueError("head() must start an entry-less fragment")
        positions = {s: self.cursor[s].at for s in self.state_names}

        def rot(name):
            f = {s: self.cursor[s].facing for s in self.state_names}
            ls = [self._leaf(name, f"c{k}", {s: positions[s] + DIRS[rotate_dir(f[s], k)] for s in f})
                  for k in range(1, 6)]
            return [self.SUCC] + ls

        self.add_backbone("h", positions, rot)
        for s in self.state_names:
            self.cursor[s] = self._advance(s)
        return self

    def port(self, name):
        """Record the current cursor pose under a connector-port name."""
        self.ports[name] = {s: self.cursor[s] for s in self.state_names}
        return self

    def custom_backbone(self, stem, positions, leaf_specs, order):
        """Escape hatch for nonstandard nodes.

        leaf_specs: {tag: {state: Pt}}; order: ccw rotation as tokens

        '@pred', '@succ', '@entry', '@exit' or leaf tags.
        """
        def rot(name):
            made = {tag: self._leaf(name, tag, pos) for tag, pos in leaf_specs.items()}
            out = []
            for tok in order:
                if tok == "@pred":
                    out.append(self._pred_token())
                elif tok == "@succ":
                    out.append(self.SUCC)
                elif tok in (ENTRY, EXIT):
                    out.append(tok)
                else:
                    out.append(made[tok])
            return self._fix_pred(out, name)

        return self.add_backbone(stem, positions, rot)

    def jump(self, pose_by_state):
        """Teleport cursors (author responsibility: only before first node)."""
        for s, pose in pose_by_state.items():
            self.cursor[s] = pose
        return self

    # -- finish ---------------------------------------------------------------

    def exit_poses(self):
        return {s: self.cursor[s] for s in self.state_names}

    def build(self, exit_port=True):
        rot = dict(self.rotation)
        last = self.backbone[-1]
        if self.SUCC in rot[last]:
            if exit_port:
                rot[last] = [EXIT if x == self.SUCC else x for x in rot[last]]
            else:
                raise ValueError("dangling successor: cap() the end or keep the exit port")
        frag = Fragment(self.backbone, self.leaves, rot)
        return frag


# ---------------------------------------------------------------------------
# templates


@dataclass
class Part:
    """One connected piece of a template plus its oracle boundary mode.

    closure 'entry': a pinned virtual rigid approach (@pre disk plus its two
    flank disks) fills the @entry slot -- the standard way a fragment is met
    by the rest of a construction.  'head': fragment starts with its own
    five-leaf node; the anchor pins it and its first successor.  'free': the
    entry approach is pinned only relative to the (unpinned) entry node: the
    part may float, which is how the two-path lock's second path gets its
    travel direction without a position pin.
    """

    fragment: Fragment
    closure: str = "entry"                      # entry | head | free
    entry_pose: object = Pose(Pt(0, 0), 0)      # Pose or {state: Pose}
    states: dict = field(default_factory=dict)  # state -> node -> Pt

    def entry_pose_for(self, state):
        if isinstance(self.entry_pose, Pose):
            return self.entry_pose
        return self.entry_pose[state]


@dataclass
class GadgetTemplate:
    name: str
    parts: list[Part]
    state_names: list[str]
    exit_pose: dict | None = None               # state -> Pose (main part)
    ports: dict = field(default_factory=dict)   # port -> state -> Pose
    bounds_override: Box | None = None
    margin: int = 2
    meta: dict = field(default_factory=dict)
    extra_pins: dict = field(default_factory=dict)   # boundary-condition pins

    @property
    def fragment(self) -> Fragment:
        return self.parts[0].fragment

    def placements(self):
        """state -> node -> Pt across all parts (states must agree)."""
        out = {}
        for s in self.state_names:
            merged = {}
            for part in self.parts:
                merged.update(part.states[s])
            out[s] = merged
        return out

    def all_points(self):
        pts = []
        for part in self.parts:
            for s, placement in part.states.items():
                pts.extend(placement.values())
        return pts

    def bounds(self) -> Box:
        if self.bounds_override is not None:
            return self.bounds_override
        return bounding_box(self.all_points() + [Pt(-2, 0)]).expand(self.margin)

    def closed_search(self, state_pins=None):
        """Components + bounds for the oracle's anchored enumeration."""
        from .oracle import Component

        comps = []
        bounds = self.bounds()
        for pi, part in enumerate(self.parts):
            tag = f"p{pi}:"
            cat, pins, rel, root, root_free = close_fragment(part, tag, state_pins)
            if pi == 0 and self.extra_pins:
                for n, spot in self.extra_pins.items():
                    pins[tag + n] = Pt(*spot)
                split = _split_at_pinned_edge(cat, pins)
                if split is not None:
                    head, tail = split
                    # search the tail first: it carries the return bar whose
                    # body then cages the outbound half's search
                    comps.append(Component(tail, tail.backbone[0], pinned=pins))
                    comps.append(Component(head, root, pinned=pins))
                    continue
            comps.append(Component(cat, root, pinned=pins, rel_pinned=rel,
                                   root_cells=None if root_free else [pins[root]]))
        return comps, bounds

    # -- serialization ------------------------------------------------------

    def to_json_dict(self):
        def pose_doc(p):
            return {"at": [p.at.u, p.at.v], "facing": p.facing}

        return {
            "name": self.name,
            "states": self.state_names,
            "parts": [
                {
                    "fragment": part.fragment.to_json_dict(),
                    "closure": part.closure,
                    "entry_pose": (pose_doc(part.entry_pose)
                                   if isinstance(part.entry_pose, Pose)
                                   else {s: pose_doc(p) for s, p in part.entry_pose.items()}),
                    "placements": {s: {n: [p.u, p.v] for n, p in sorted(pl.items())}
                                   for s, pl in part.states.items()},
                }
                for part in self.parts
            ],
            "exit_pose": ({s: pose_doc(p) for s, p in self.exit_pose.items()}
                          if self.exit_pose else None),
            "ports": {name: {s: pose_doc(p) for s, p in by_state.items()}
                      for name, by_state in sorted(self.ports.items())},
            "bounds": list(self.bounds_override) if self.bounds_override else None,
            "meta": self.meta,
        }

    def dumps(self):
        return json.dumps(self.to_json_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc):
        def pose(d):
            return Pose(Pt(*d["at"]), d["facing"])

        try:
            parts = []
            for pd in doc["parts"]:
                ep = pd["entry_pose"]
                entry = pose(ep) if "at" in ep else {s: pose(p) for s, p in ep.items()}
                parts.append(Part(
                    Fragment.from_json_dict(pd["fragment"]),
                    closure=pd["closure"],
                    entry_pose=entry,
                    states={s: {n: Pt(*p) for n, p in pl.items()}
                            for s, pl in pd["placements"].items()},
                ))
            return cls(
                name=doc["name"],
                parts=parts,
                state_names=list(doc["states"]),
                exit_pose=({s: pose(p) for s, p in doc["exit_pose"].items()}
                           if doc.get("exit_pose") else None),
                ports={name: {s: pose(p) for s, p in by_state.items()}
                       for name, by_state in doc.get("ports", {}).items()},
                bounds_override=Box(*doc["bounds"]) if doc.get("bounds") else None,
                meta=doc.get("meta", {}),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"bad template document: {exc}") from exc

    @classmethod
    def loads(cls, text):
        return cls.from_json_dict(json.loads(text))


def _split_at_pinned_edge(cat, pins):
    """Cut a caterpillar at the last backbone edge with both ends pinned.

    The cut edge's geometry is fully determined by the pins, so searching
    the two halves as separate components (sharing one occupancy grid and
    the full rotation data) enumerates exactly the same placements.
    """
    bb = cat.backbone
    cut = None
    for i in range(len(bb) - 1):
        if bb[i] in pins and bb[i + 1] in pins:
            cut = i
    if cut is None or cut < 2 or cut > len(bb) - 3:
        return None
    head_bb, tail_bb = bb[:cut + 1], bb[cut + 1:]

    def sub(bones):
        keep = set(bones)
        leaves = {n: list(cat.leaves.get(n, ())) for n in bones if cat.leaves.get(n)}
        nodes = set(bones) | {l for ls in leaves.values() for l in ls}
        rotation = {n: list(cat.rotation[n]) for n in nodes}
        return Fragment(list(bones), leaves, rotation)

    return sub(head_bb), sub(tail_bb)


def close_fragment(part: Part, tag: str, state_pins=None):
    """Materialize a part's boundary for the oracle.

    Returns (caterpillar, pins, rel_pins, root, root_free).  The fragment's
    @entry slot is filled by a virtual backbone disk with two flank leaves
    (the cross-section of a rigid approach path); @exit gets a free stub
    disk so the final node is packed the same way a successor would pack it.
    """
    frag = part.fragment.renamed(tag)
    backbone = list(frag.backbone)
    leaves = {n: list(ls) for n, ls in frag.leaves.items()}
    rotation = {n: list(r) for n, r in frag.rotation.items()}
    pins: dict[str, Pt] = {}
    rel: dict[str, Pt] = {}

    pose = part.entry_pose_for(state_pins) if state_pins is not None else None
    if pose is None:
        pose = part.entry_pose if isinstance(part.entry_pose, Pose) else None
        if pose is None:
            raise ValueError(f"part needs state_pins to resolve its entry pose")

    entry = frag.entry_node
    exit_ = frag.exit_node

    if exit_ is not None:
        stub = tag + "@post"
        rotation[exit_] = [stub if x == EXIT else x for x in rotation[exit_]]
        leaves.setdefault(exit_, []).append(stub)
        rotation[stub] = [exit_]

    if part.closure == "head":
        # anchor a self-starting fragment: pin the head and its successor,
        # which quotients out translation and rotation
        root = backbone[0]
        pins[root] = pose.at
        nxt = backbone[1] if len(backbone) > 1 else tag + "@post"
        pins[nxt] = pose.at + DIRS[pose.facing]
        cat = Fragment(backbone, leaves, rotation)
        return cat, pins, rel, root, False

    if entry is None:
        raise ValueError("entry closure requested for a fragment without @entry")

    pre = tag + "@pre"
    pre_up = pre + ".up"
    pre_dn = pre + ".dn"
    rotation[entry] = [pre if x == ENTRY else x for x in rotation[entry]]
    backbone = [pre] + backbone
    leaves[pre] = [pre_up, pre_dn]
    rotation[pre] = [entry, pre_up, pre_dn]
    rotation[pre_up] = [pre]
    rotation[pre_dn] = [pre]
    cat = Fragment(backbone, leaves, rotation)

    f = pose.facing
    if part.closure == "free":
        # root at the approach disk so the direction pins constrain the
        # search from the second node on
        root = pre
        rel[entry] = DIRS[f]
        rel[pre_up] = DIRS[rotate_dir(f, 1)]
        rel[pre_dn] = DIRS[rotate_dir(f, -1)]
        return cat, pins, rel, root, True

    root = pre
    offsets = {
        pre: -DIRS[f],
        pre_up: -DIRS[f] + DIRS[rotate_dir(f, 1)],
        pre_dn: -DIRS[f] + DIRS[rotate_dir(f, -1)],
        entry: Pt(0, 0),
    }
    for n, off in offsets.items():
        pins[n] = pose.at + off
    return cat, pins, rel, root, False


# ---------------------------------------------------------------------------
# the gadget operations


def rigid_path(length: int, start: str = "head") -> GadgetTemplate:
    """Straight rigid run.

    start='head': self-locking form opening with a five-leaf node (anchored,
    it has a unique realization).  start='splice': continuation form whose
    first node carries the usual two flanks and an open @entry slot; its
    rigidity is inherited from whatever it is spliced onto.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if start == "head":
        b = FragmentBuilder(entry=False)
        b.head()
        if length > 1:
            b.straight(length - 1)
    elif start == "splice":
        b = FragmentBuilder(entry=True)
        b.straight(length)
    else:
        raise ValueError(start)
    frag = b.build(exit_port=True)
    part = Part(frag, closure=("head" if start == "head" else "entry"),
                states={"fixed": b.pos["fixed"]})
    return GadgetTemplate(f"rigid_path[{length},{start}]", [part], ["fixed"],
                          exit_pose=b.exit_poses(), ports=dict(b.ports))


def rigid_turn(direction: str) -> GadgetTemplate:
    """Turn node plus one settling straight node; exit facing = entry +-60."""
    b = FragmentBuilder(entry=True)
    b.turn(direction)
    b.straight(1)
    frag = b.build(exit_port=True)
    part = Part(frag, states={"fixed": b.pos["fixed"]})
    return GadgetTemplate(f"rigid_turn[{direction}]", [part], ["fixed"],
                          exit_pose=b.exit_poses())


def rigidity_joint(weakened: bool = False) -> GadgetTemplate:
    """A leafless (slack) backbone edge re-rigidified by a six-neighbor node.

    The slack node's successor has four leaves, so it needs six free cells;
    on the grid only the straight continuation offers them, and the stored
    rotation then pins every cell.  Dropping one of the four leaves
    (weakened=True) reopens bent placements, which the oracle counts.
    """
    b = FragmentBuilder(entry=True)
    here = {s: b.cursor[s].at for s in b.state_names}
    b.custom_backbone("k", here, {}, ["@pred", "@succ"])
    b.jump({s: Pose(here[s] + DIRS[b.cursor[s].facing], b.cursor[s].facing)
            for s in b.state_names})

    here = {s: b.cursor[s].at for s in b.state_names}
    f = b.cursor[b.state_names[0]].facing
    leafdirs = {"m2": -2, "m1": -1, "p1": 1, "p2": 2}
    if weakened:
        del leafdirs["p2"]
    specs = {tag: {s: here[s] + DIRS[rotate_dir(f, k)] for s in b.state_names}
             for tag, k in leafdirs.items()}
    order = ["@pred", "m2", "m1", "@succ", "p1"] + (["p2"] if not weakened else [])
    b.custom_backbone("r", here, specs, order)
    b.jump({s: Pose(here[s] + DIRS[f], f) for s in b.state_names})

    b.straight(1)
    frag = b.build(exit_port=True)
    part = Part(frag, states={"fixed": b.pos["fixed"]})
    name = "rigidity_joint[weakened]" if weakened else "rigidity_joint"
    return GadgetTemplate(name, [part], ["fixed"], exit_pose=b.exit_poses())


def two_values_switch(blocking: bool = True) -> GadgetTemplate:
    """Reparented-leaf joint allowing exactly two placements of its tail.

    The backbone first lays down a straight grid-aligned run, U-turns, and
    comes back underneath carrying the joint, so the run above doubles as
    the structure that collides with the tail's swept intermediate positions
    (only the two grid extremes are representable anyway; the run documents
    the off-grid argument).  blocking=False drops the run and keeps just the
    joint, for comparison.
    """
    b = FragmentBuilder(states=("up", "down"), entry=True)
    if blocking:
        b.straight(7)
        b.turn("right")
        b.straight(2)
        b.turn("right")
        b.turn("right")
        b.straight(2)
    b.switch("right", kinked_states={"up"})
    b.straight(3)
    frag = b.build(exit_port=True)
    part = Part(frag, states={s: b.pos[s] for s in b.state_names})
    name = "two_values_switch" if blocking else "two_values_switch[bare]"
    return GadgetTemplate(name, [part], ["up", "down"], exit_pose=b.exit_poses())


def two_path_lock(widened: bool = False) -> GadgetTemplate:
    """Two antiparallel runs forced into one relative position.

    The lower path (traveling +x along v=0) carries a rigid tower whose
    three crest leaves reach row 5; the upper path (traveling -x along v=6)
    omits exactly the three down-flanks where the crest docks.  Inside the
    bounding box that encodes "the paths cannot move vertically apart by
    more than six disks" (upper backbone at most six rows above the lower),
    every translation except the docked one collides: sliding two columns
    puts a crest leaf under a present flank, and every smaller vertical gap
    runs the tower into the upper body.  Widening the box two rows frees the
    upper path from the crest and the placement count blows up.
    """
    lower = FragmentBuilder(entry=True)
    lower.straight(2)
    lower.turn("left")
    lower.straight(3)
    lower.turn("right")
    lower.turn("right")
    lower.straight(3)
    lower.turn("left")
    lower.straight(2)
    lower_frag = lower.build(exit_port=True)

    upper = FragmentBuilder(entry=True, start=Pose(Pt(20, 6), 3))
    upper.straight(4)
    upper.straight(3, flanks="right")   # the pocket: no down-flanks here
    upper.straight(4)
    upper_frag = upper.build(exit_port=True)

    # Pin the rigid tower side (one forced completion); the pocketed return
    # path floats inside the box, which is exactly the freedom under test,
    # and its stray bends die against the pinned tower.
    box = Box(-4, -1, 24, 9 if widened else 7)
    parts = [
        Part(lower_frag, closure="entry", states={"fixed": lower.pos["fixed"]}),
        Part(upper_frag, closure="free", entry_pose=Pose(Pt(20, 6), 3),
             states={"fixed": upper.pos["fixed"]}),
    ]
    name = "two_path_lock[widened]" if widened else "two_path_lock"
    return GadgetTemplate(name, parts, ["fixed"], exit_pose=lower.exit_poses(),
                          bounds_override=box,
                          meta={"separation_rows": 8 if widened else 6})


def _down_stub(b: FragmentBuilder, name: str):
    """Short-circuited connector detour hanging below a row-y run.

    Marks the pose where a real connector would keep descending instead of
    U-turning back up ("if no clause is connected here, we just connect the
    two parts directly").
    """
    b.turn("right", leaves="ab")
    b.straight(1, flanks="right")
    b.port(name)
    b.turn("left", leaves="ab")
    b.turn("left", leaves="ab")
    b.straight(1, flanks="right")
    b.turn("right", leaves="a")
    b.straight(1, flanks="right")


def add_leaf(b: FragmentBuilder, host: str, tag: str, positions, after: str | None = None):
    """Attach an extra leaf to an existing node, inserted in its rotation
    right after the named neighbor (ccw), or appended when after is None."""
    name = b._leaf(host, tag, positions)
    rot = b.rotation[host]
    if after is None:
        b.rotation[host] = rot + [name]
    else:
        b.rotation[host] = sum(([x, name] if x == after else [x] for x in rot), [])
    return name


ON, OFF = "on", "off"


def variable_out_half(b: FragmentBuilder, flip: bool, dn_port, stub=True):
    """Outbound half of one variable cell.

    Row-0/-2 floor loop (the fixed part that stops up-down escapes), climb,
    switch pair, row-2 body with the hanging connector stub, in-line tooth
    with its bypass loop, de-correlating exit pair, dive back to the row-0
    interface.  Everything after the exit pair sits at the same offset in
    both states; flip chooses which state shifts the body.
    """
    st = b.state_names
    ent = {OFF} if flip else {ON}
    ret = {ON} if flip else {OFF}
    x0 = b.cursor[st[0]].at.u

    b.straight(1, flanks="right")
    b.turn("right", leaves="ab")
    b.straight(1, flanks="right")
    b.turn("left", leaves="ab")                   # onto the row -2 floor
    for i in range(11 if stub else 8):            # floor out, half up-flanks
        b.straight(1, flanks="both" if i % 2 == 0 else "right")
    b.turn("left", leaves="b")
    b.turn("left", leaves="b")
    b.turn("left", leaves="")                     # back along row 0
    floor_top = 8 if stub else 5
    for i in range(floor_top):                    # interleaved down-flanks
        b.straight(1, flanks="left" if i % 2 == 1 else "")
    b.turn("right", leaves="ab")                  # climb to row 2
    b.turn("right", leaves="ab")
    b.turn("right", leaves="ab")
    b.straight(1, flanks="right")
    b.switch("left", ent, follower="r")
    b.straight(1, flanks="right")
    b.switch("right", ent, follower="rf", joint_flank=False)
    b.straight(1, flanks="right")      # dock gap: the return bar locks here
    if dn_port and stub:
        _down_stub(b, dn_port)
    elif dn_port:
        b.port(dn_port)
    b.straight(1, flanks="right")      # dock gap
    b.straight(2, flanks="both")

    # in-line tooth; the backbone hops over it through row 3
    here = {s: b.cursor[s].at for s in st}
    f = b.cursor[st[0]].facing
    b.custom_backbone("n", here, {"tooth": {s: here[s] + DIRS[f] for s in st}},
                      ["@pred", "tooth", "@succ"])
    c1 = {s: here[s] + DIRS[1] for s in st}
    b.custom_backbone("c", c1, {}, ["@pred", "@succ"])
    c2 = {s: c1[s] + DIRS[0] for s in st}
    b.custom_backbone("d", c2, {"r": {s: c2[s] + DIRS[0] for s in st}},
                      ["@pred", "@succ", "r"])
    c3 = {s: c2[s] + DIRS[5] for s in st}
    b.custom_backbone("e", c3, {"a": {s: c3[s] + DIRS[4] for s in st},
                                "b": {s: c3[s] + DIRS[5] for s in st}},
                      ["@pred", "a", "b", "@succ"])
    b.jump({s: Pose(c3[s] + DIRS[0], 0) for s in st})

    b.switch("left", ret, follower="r")
    b.straight(1, flanks="right")
    b.switch("right", ret, follower="rf", joint_flank=False)
    b.straight(1, flanks="right")
    b.turn("right", leaves="ab")                  # dive to the interface
    b.straight(1)
    b.turn("left", leaves="ab")
    return b


def turnaround(b: FragmentBuilder):
    """Far-right U: row 0 heading +x becomes row 4 heading -x."""
    b.straight(1, flanks="right")
    b.turn("left", leaves="b")
    b.straight(2)
    b.turn("left", leaves="b")
    b.turn("left", leaves="b")
    return b


def variable_return_half(b: FragmentBuilder, flip: bool, up_port, end_x,
                         stub=True):
    """Return bar over one cell: the re-shift pair, the upward connector
    stub, and the leftward run whose added down-leaves (placed by
    `patch_kill_flanks`) interlock with the body's claims so the way back
    must agree with the way out."""
    st = b.state_names
    ret = {ON} if flip else {OFF}
    kinked = {OFF} if flip else {ON}
    b.switch("right", kinked, follower="r")
    b.straight(1, flanks="right")
    b.switch("left", kinked, follower="r", joint_flank=False)
    b.straight(1, flanks="right")
    if up_port and stub:
        b.turn("right", leaves="ab")
        b.straight(1, flanks="right")
        b.port(up_port)
        b.turn("left", leaves="ab")
        b.turn("left", leaves="ab")
        b.straight(1, flanks="right")
        b.turn("right", leaves="a")
    elif up_port:
        b.port(up_port)
    while b.cursor[st[0]].at.u > end_x:
        b.straight(1, flanks="right")
    return b


def patch_kill_flanks(b: FragmentBuilder, bar_rows=(4,), claim_row=3,
                      max_per_cell=16):
    """Hang down-leaves from return-bar nodes wherever they are collision
    free in both states and collide with an out-half claim in the two mixed
    combinations; these leaves are the lock between the traces."""
    bar_nodes = [n for n in b.backbone
                 if b.pos[ON][n].v in bar_rows and b.pos[OFF][n].v in bar_rows]
    occupied = {s: set(b.pos[s].values()) for s in (ON, OFF)}
    claims = {s: {p for p in b.pos[s].values() if p.v == claim_row} for s in (ON, OFF)}
    added = 0
    for n in bar_nodes:
        if not n.startswith("s"):
            continue
        cell = {s: b.pos[s][n] + DIRS[4] for s in (ON, OFF)}
        if cell[ON].v != claim_row:
            continue
        if any(cell[s] in occupied[s] for s in (ON, OFF)):
            continue
        # neighbor clearance: a leaf may not land touching-distance-0 with
        # anything, which occupancy covers; place every safe flank -- the
        # denser the row, the more rigid the bar and the stronger the lock
        add_leaf(b, n, f"k{added}", cell)
        for s in (ON, OFF):
            occupied[s].add(cell[s])
        added += 1
    return added


def variable_hexagon(connectors: int, flips=None, capacity: int = 12,
                     reduced: bool = False) -> GadgetTemplate:
    """Two-state variable gadget: a chain of switched cells.

    Each cell contributes a shifting row-2 body with a downward connector
    port and a counter-shifting row-4 return bar with an upward port, so
    consecutive ports shift in opposite horizontal directions; the shared
    claim row between the traces locks the whole chain into exactly two
    realizations (true: bodies right, bars left; false: the reverse).
    flips[k] swaps which state shifts cell k's ports, which is how the
    compiler matches literal polarity.  The reduced form (one cell, no stub
    structure, self-contained ends) is the oracle's test instance.
    """
    if connectors < 1:
        raise ValueError("connectors must be >= 1")
    if connectors > capacity:
        raise CapacityError(f"{connectors} connectors exceed capacity {capacity}")
    cells = max(1, (connectors + 1) // 2)
    flips = list(flips) if flips is not None else [False] * cells
    if len(flips) != cells:
        raise ValueError("flips must name one choice per cell")
    stub = not reduced

    b = FragmentBuilder(states=(ON, OFF), entry=True)
    cell_right = []
    port_order = []
    frame_edge = []
    for k in range(cells):
        mark = len(b.backbone)
        dn = f"dn{k}" if 2 * k < connectors else None
        variable_out_half(b, flips[k], dn, stub=stub)
        first_joint = next(i for i in range(mark, len(b.backbone))
                           if b.backbone[i].startswith("j"))
        frame_edge.append(b.backbone[first_joint - 1])
        cell_right.append(b.cursor[ON].at.u)
        if dn:
            port_order.append(dn)
    turnaround(b)
    ta_nodes = b.backbone[-3:]
    for k in reversed(range(cells)):
        up = f"up{k}" if 2 * k + 1 < connectors or connectors == 1 and False else None
        if 2 * k + 1 >= connectors:
            up = None
        end = 24 if k == 0 else cell_right[k - 1] + 24
        variable_return_half(b, flips[k], up, end_x=end, stub=stub)
        if up:
            port_order.insert(port_order.index(f"dn{k}") + 1, up)
    patch_kill_flanks(b)
    b.straight(1, flanks="")
    b.cap()

    frag = b.build(exit_port=False)
    part = Part(frag, states={s: dict(b.pos[s]) for s in b.state_names})
    name = f"variable_hexagon[{connectors}{',reduced' if reduced else ''}]"
    # Boundary pins: every node whose designed position is the same in both
    # states is frame, not mechanism -- the paper's own argument fixes the
    # frame ("assume the hexagon in the center is somehow fixed") and asks
    # how many placements the moving parts admit.  Frame rigidity itself is
    # the rigid-path/turn gadgets' separately verified business.
    extra = {}
    for bb in b.backbone:
        for n in [bb] + b.leaves.get(bb, []):
            spots = {tuple(b.pos[s][n]) for s in b.state_names}
            if len(spots) == 1:
                extra[n] = next(iter(spots))
    t = GadgetTemplate(name, [part], [ON, OFF], exit_pose=None,
                       ports={p: dict(b.ports[p]) for p in port_order},
                       meta={"port_order": port_order, "cells": cells,
                             "capacity": capacity},
                       extra_pins=extra)
    return t


# ---------------------------------------------------------------------------
# template checks


def check_soundness(template: GadgetTemplate):
    """Exact-verify every stored state placement; returns failure strings."""
    from .verifier import verify

    problems = []
    for s in template.state_names:
        occupied = {}
        for pi, part in enumerate(template.parts):
            if s not in part.states:
                problems.append(f"{template.name}/{s}: part {pi} missing placement")
                continue
            placement = part.states[s]
            rep = verify(part.fragment, placement, mode="exact")
            for v in rep.violations:
                problems.append(f"{template.name}/{s}/part{pi}: {v.kind}{v.nodes}")
            for n, p in placement.items():
                if p in occupied:
                    problems.append(
                        f"{template.name}/{s}: {n} overlaps {occupied[p]} at {tuple(p)}")
                occupied[p] = f"p{pi}:{n}"
    return problems


def instantiate(template: GadgetTemplate, pose: Pose, state: str, prefix: str):
    """Fragment + absolute placement of a template at a pose in a state."""
    placements = template.placements()[state]
    frag = Fragment(
        [f"{prefix}{b}" for b in template.fragment.backbone],
        {f"{prefix}{b}": [f"{prefix}{x}" for x in ls]
         for b, ls in template.fragment.leaves.items()},
        {f"{prefix}{n}": [x if x in (ENTRY, EXIT) else f"{prefix}{x}" for x in r]
         for n, r in template.fragment.rotation.items()},
    )
    placed = {f"{prefix}{n}": transform(p, pose) for n, p in placements.items()
              if n in set(template.fragment.nodes())}
    exit_pose = None
    if template.exit_pose:
        exit_pose = transform_pose(template.exit_pose[state], pose)
    ports = {name: transform_pose(by_state[state], pose)
             for name, by_state in template.ports.items()}
    return frag, placed, exit_pose, ports
