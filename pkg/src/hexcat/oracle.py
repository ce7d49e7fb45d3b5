"""Exhaustive search for all lattice placements of small embedded caterpillars.

This is the ground-truth instrument behind every gadget's claimed
realization count.  "Up to rotation" is operationalized by pinning: the
caller pins an anchor (and usually a short virtual approach structure), and
the search enumerates every total injective in-bounds placement that passes
exact verification.

The search walks nodes in backbone order with leaves right after their
backbone node, rooted at the anchor; every node's candidate cells are the
six neighbors of its already-placed tree parent, which is complete because
the graph is a tree.  Pruning: bounds, cell occupancy, pin equality, and
partial rotation-order checks as soon as a node has two placed neighbors.

A deliberately dumber enumerator (`brute_force_search`) keeps only the
completeness-critical parts -- parent-neighbor candidates, occupancy,
bounds -- and filters with the full verifier at the end.  The two must agree
exactly on small fragments; the test suite holds them to that.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .caterpillar import EmbeddedCaterpillar
from .hexlattice import DIRS, Box, Pt
from .verifier import is_cyclic_rotation, verify


class InfeasibleAnchor(ValueError):
    """Anchor or pin lies outside the search bounds."""


class Truncated(RuntimeError):
    """Solution limit hit; the count is not exhaustive."""


@dataclass
class SearchSpec:
    caterpillar: EmbeddedCaterpillar
    bounds: Box
    pinned: dict = field(default_factory=dict)     # node -> Pt
    anchor: tuple | None = None                    # (node, Pose)
    limit: int | None = None


@dataclass
class Component:
    """One caterpillar of a search forest with its own boundary conditions."""

    caterpillar: EmbeddedCaterpillar
    root: str
    pinned: dict = field(default_factory=dict)       # node -> Pt (absolute)
    rel_pinned: dict = field(default_factory=dict)   # node -> offset from root
    root_cells: list | None = None                   # None: pin or whole box


def search(spec: SearchSpec):
    """All placements satisfying the spec; returns (placements, truncated)."""
    pinned = {n: Pt(*p) for n, p in spec.pinned.items()}
    root = None
    if spec.anchor is not None:
        node, pose = spec.anchor
        root = node
        pinned.setdefault(node, Pt(*pose.at))
    comp = Component(spec.caterpillar, root or _default_root(spec.caterpillar, pinned),
                     pinned=pinned)
    facing_child = None
    if spec.anchor is not None and spec.anchor[1].facing is not None:
        facing_child = spec.anchor[1]
    return search_forest([comp], spec.bounds, limit=spec.limit,
                         anchor_facing=(root, facing_child) if facing_child else None)


def _default_root(cat, pinned):
    for b in cat.backbone:
        if b in pinned:
            return b
    for n in cat.nodes():
        if n in pinned:
            return n
    return cat.backbone[0]


def node_order(cat: EmbeddedCaterpillar, root: str) -> list[str]:
    """Backbone order with leaves after their backbone node, rooted at root.

    If the root is mid-backbone the forward sweep runs first, then the
    backward one; a leaf root precedes its backbone node.
    """
    order: list[str] = []
    if root not in cat.backbone:
        order.append(root)
        host = next(b for b, ls in cat.leaves.items() if root in ls)
        idx = cat.backbone.index(host)
    else:
        idx = cat.backbone.index(root)

    def emit(b):
        if b not in order:
            order.append(b)
        order.extend(l for l in cat.leaves.get(b, ()) if l not in order)

    for b in cat.backbone[idx:]:
        emit(b)
    for b in reversed(cat.backbone[:idx]):
        emit(b)
    return order


def _parents(cat, order):
    adj = cat.adjacency()
    pos = {n: i for i, n in enumerate(order)}
    parents = {}
    for n in order[1:]:
        placed_nbrs = [x for x in adj[n] if pos[x] < pos[n]]
        if len(placed_nbrs) != 1:
            raise ValueError(f"node {n} has {len(placed_nbrs)} earlier neighbors; not a tree order")
        parents[n] = placed_nbrs[0]
    return parents


_DIR_INDEX = {(2, 0): 0, (1, 1): 1, (-1, 1): 2, (-2, 0): 3, (-1, -1): 4, (1, -1): 5}


def _degree_feasible(cat, node, placement, occupied, bounds):
    """A placed node must keep one free neighbor cell per unplaced neighbor."""
    from .hexlattice import neighbors as _nbrs

    need = sum(1 for x in cat.neighbors_of(node) if x not in placement)
    if need == 0:
        return True
    free = 0
    for cell in _nbrs(placement[node]):
        if cell not in occupied and bounds.contains(cell):
            free += 1
            if free >= need:
                return True
    return False


def _rotation_ok(cat, node, placement):
    """Placed neighbors must touch the node and follow its stored ccw order.

    Tree search only ever places a node's neighbors on its six touching
    cells, so directions reduce to step indices 0..5; any other offset is a
    stretched edge and the branch dies immediately.
    """
    c = placement[node]
    placed = []
    ks = []
    for x in cat.rotation.get(node, ()):
        p = placement.get(x)
        if p is None:
            continue
        k = _DIR_INDEX.get((p[0] - c[0], p[1] - c[1]))
        if k is None:
            return False
        placed.append(x)
        ks.append(k)
    if len(placed) < 2:
        return True
    order = sorted(range(len(ks)), key=ks.__getitem__)
    return is_cyclic_rotation([placed[i] for i in order], placed)


def _legal_cells(comp, cat, n, parent, placement, occupied, bounds, prune_rotation):
    base = placement[parent]
    pin = comp.pinned.get(n)
    rel = comp.rel_pinned.get(n)
    want = None
    if rel is not None:
        rp = placement[comp.root]
        want = Pt(rp.u + rel[0], rp.v + rel[1])
    out = []
    for d in DIRS:
        cell = Pt(base.u + d.u, base.v + d.v)
        if pin is not None and cell != pin:
            continue
        if want is not None and cell != want:
            continue
        if not bounds.contains(cell) or cell in occupied:
            continue
        if prune_rotation:
            placement[n] = cell
            ok = _rotation_ok(cat, n, placement) and _rotation_ok(cat, parent, placement)
            del placement[n]
            if not ok:
                continue
        out.append(cell)
    return out


def _search_mrv(comps, bounds, placement, occupied, on_solution,
                prune_rotation=True):
    """Most-constrained-first placement across all components at once.

    Candidate cells still come from each node's placed tree parent, so the
    solution set matches the plain backbone order; letting the components
    grow together matters when they brace each other, as interlocked gadget
    halves do.  Components whose root is unpinned (a floating path entering
    a bounding box) contribute their root cells as an outer choice.
    """
    info = {}
    children: dict[str, list] = {}
    for comp in comps:
        cat = comp.caterpillar
        order = node_order(cat, comp.root)
        parents = _parents(cat, order)
        for child, par in parents.items():
            children.setdefault(par, []).append(child)
        for n in order:
            info[n] = (comp, cat, parents.get(n))

    def extend(frontier):
        if not frontier:
            on_solution()
            return
        best_i, best_cells = None, None
        for i, n in enumerate(frontier):
            comp, cat, par = info[n]
            cells = _legal_cells(comp, cat, n, par, placement, occupied,
                                 bounds, prune_rotation)
            if best_cells is None or len(cells) < len(best_cells):
                best_i, best_cells = i, cells
                if not cells:
                    return
                if len(cells) == 1:
                    break
        n = frontier[best_i]
        comp, cat, par = info[n]
        rest = frontier[:best_i] + frontier[best_i + 1:]
        for cell in best_cells:
            placement[n] = cell
            occupied[cell] = n
            ok = True
            if prune_rotation:
                ok = (_rotation_ok(cat, n, placement)
                      and _rotation_ok(cat, par, placement)
                      and _degree_feasible(cat, n, placement, occupied, bounds)
                      and _degree_feasible(cat, par, placement, occupied, bounds))
            if ok:
                extend(rest + children.get(n, []))
            del placement[n]
            del occupied[cell]

    def seed(ci, frontier):
        if ci == len(comps):
            extend(frontier)
            return
        comp = comps[ci]
        root = comp.root
        roots = ([comp.pinned[root]] if root in comp.pinned
                 else (list(comp.root_cells) if comp.root_cells is not None
                       else list(bounds.points())))
        for cell in roots:
            if not bounds.contains(cell) or cell in occupied:
                continue
            placement[root] = cell
            occupied[cell] = root
            seed(ci + 1, frontier + children.get(root, []))
            del placement[root]
            del occupied[cell]

    seed(0, [])


def search_forest(components, bounds: Box, limit=None, anchor_facing=None,
                  prune_rotation=True, final_verify=True, mrv=False):
    """Enumerate joint placements of several caterpillars sharing one grid.

    Components are placed one after another; within a component nodes follow
    `node_order` from its root, or most-constrained-first when mrv is set
    (same candidate rule, so the solution set is identical).  Every pin must
    be inside bounds.
    """
    plans = []
    for comp in components:
        for n, p in comp.pinned.items():
            if not bounds.contains(p):
                raise InfeasibleAnchor(f"pin {n} at {tuple(p)} outside bounds {bounds}")
        order = node_order(comp.caterpillar, comp.root)
        parents = _parents(comp.caterpillar, order)
        plans.append((comp, order, parents))

    solutions = []
    truncated = [False]
    occupied: dict[Pt, str] = {}
    placement: dict[str, Pt] = {}

    def place_component(ci):
        if ci == len(plans):
            if final_verify and not all(
                    verify(c.caterpillar, placement, mode="exact").ok for c, _, _ in plans):
                return
            solutions.append(dict(placement))
            if limit is not None and len(solutions) >= limit:
                truncated[0] = True
            return
        comp, order, parents = plans[ci]
        if mrv:
            def record():
                if not truncated[0]:
                    place_component(len(plans))
            _search_mrv([c for c, _, _ in plans[ci:]], bounds, placement,
                        occupied, record, prune_rotation=prune_rotation)
            return

        def root_candidates():
            if comp.root in comp.pinned:
                return [comp.pinned[comp.root]]
            if comp.root_cells is not None:
                return list(comp.root_cells)
            return list(bounds.points())

        def place(i):
            if truncated[0]:
                return
            if i == len(order):
                place_component(ci + 1)
                return
            n = order[i]
            cat = comp.caterpillar
            if i == 0:
                candidates = root_candidates()
            else:
                par = parents[n]
                base = placement[par]
                candidates = [Pt(base.u + d.u, base.v + d.v) for d in DIRS]
            pin = comp.pinned.get(n)
            rel = comp.rel_pinned.get(n)
            root_pos = placement.get(comp.root)
            for cell in candidates:
                if pin is not None and cell != pin:
                    continue
                if rel is not None and cell != Pt(root_pos.u + rel[0], root_pos.v + rel[1]):
                    continue
                if not bounds.contains(cell) or cell in occupied:
                    continue
                if anchor_facing and ci == 0 and i == 1 and n in cat.neighbors_of(comp.root):
                    root_node, pose = anchor_facing
                    if comp.root == root_node:
                        want = Pt(placement[root_node].u + DIRS[pose.facing].u,
                                  placement[root_node].v + DIRS[pose.facing].v)
                        if cell != want:
                            continue
                placement[n] = cell
                occupied[cell] = n
                ok = True
                if prune_rotation:
                    ok = _rotation_ok(cat, n, placement)
                    if ok and i > 0:
                        ok = _rotation_ok(cat, parents[n], placement)
                    if ok:
                        ok = _degree_feasible(cat, n, placement, occupied, bounds)
                    if ok and i > 0:
                        ok = _degree_feasible(cat, parents[n], placement, occupied, bounds)
                if ok:
                    place(i + 1)
                del placement[n]
                del occupied[cell]

        place(0)

    place_component(0)
    canon = [n for _, order, _ in plans for n in order]
    solutions.sort(key=lambda sol: tuple(sol[n] for n in canon))
    return solutions, truncated[0]


def brute_force_search(components, bounds: Box, limit=None):
    """Independent enumerator: parent-neighbor candidates, occupancy and
    bounds only, full verification at the leaves.  Exponential; keep small."""
    return search_forest(components, bounds, limit=limit,
                         prune_rotation=False, final_verify=True)


def count_states(template, state_pins=None) -> int:
    """Anchored realization count of a gadget template.

    Wraps `search_forest` with the template's standard closure (virtual
    rigid approach pinned behind the entry, free stub on the exit) and
    footprint-derived bounds.  Raises Truncated if the safety limit trips.
    """
    comps, bounds = template.closed_search(state_pins=state_pins)
    limit = 10_000
    sols, truncated = search_forest(comps, bounds, limit=limit, mrv=True)
    if truncated:
        raise Truncated(f"template {template.name}: over {limit} placements")
    return len(sols)


def search_placements(template, state_pins=None):
    comps, bounds = template.closed_search(state_pins=state_pins)
    sols, _ = search_forest(comps, bounds, mrv=True)
    return sols
