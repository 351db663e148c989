"""Covering the bridges of a working solution.

A starting solution is cheap but full of bridges.  This module removes them
one transformation at a time: each step either merges two components with a
single link, or closes a cycle through foreign components (a *pseudo-ear*,
paid for by the credit the cycle frees up), or, in a few cornered positions,
swaps chosen links for an exactly solved side piece.  Steps never increase
the cost ledger, so the 2-edge-connected result is as affordable as the
input.

All searches are deterministic.  Candidate moves are generated in a fixed
preference order and the first one that survives verification (invariants,
cost, potential) is applied; verification always rebuilds the decomposition
and the ledger from scratch rather than patching them.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from .core import (
    BlockKind,
    ComponentTree,
    PapInstance,
    derive_instance,
    link,
)
from .oracle import BudgetExceeded, Infeasible, SearchBudget, exact_pap
from .starting import WorkingSolution, check_invariants

logger = logging.getLogger(__name__)

#: Supernode in the contracted view: ``("v", vertex)``, ``("b", block_id)``
#: or ``("c", component_id)``.
Node = tuple[str, int]

#: Cardinality cap for the exactly solved side pieces of the exchange moves.
SIDE_SOLVE_CAP = 4

_SIDE_NODE_LIMIT = 1_000_000


class NoProgress(RuntimeError):
    """No covering move applies to the current solution.

    Every dispatch stage is backed by a proof that a move exists whenever the
    instance is structured, so running into this error is a certificate that
    the input is not; ``stage`` and ``detail`` name the component that
    resisted, for reporting.
    """

    def __init__(self, stage: str, detail: str) -> None:
        super().__init__(f"{stage}: {detail}")
        self.stage = stage
        self.detail = detail


class CreditVerdict(Enum):
    SUFFICIENT = "sufficient"
    INSUFFICIENT = "insufficient"


# -- the contracted view ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class ContractedView:
    """One bridged component with everything around it contracted.

    Nodes reuse the component tree's tagging and add a third kind: ``("v",
    x)`` is a vertex of the component outside any block, ``("b", bid)`` one
    of its blocks, and ``("c", cj)`` a whole other component squashed to a
    point.  Restricted to the component, the chosen-edge graph is exactly
    ``tree``; every ``("c", ...)`` node is a singleton there.  Links keep
    their instance ids throughout, so anything found in the view translates
    directly back to the instance.
    """

    solution: WorkingSolution
    component_id: int
    tree: ComponentTree

    def node_of(self, v: int) -> Node:
        decomp = self.solution.decomposition
        ci = decomp.component_of[v]
        if ci != self.component_id:
            return ("c", ci)
        bid = decomp.block_of[v]
        return ("v", v) if bid is None else ("b", bid)

    @cached_property
    def component_nodes(self) -> frozenset[Node]:
        return frozenset(self.tree.nodes)

    @cached_property
    def plain_nodes(self) -> tuple[Node, ...]:
        return tuple(n for n in self.tree.nodes if n[0] == "v")

    @cached_property
    def block_nodes(self) -> tuple[Node, ...]:
        return tuple(n for n in self.tree.nodes if n[0] == "b")

    @cached_property
    def leaf_nodes(self) -> tuple[Node, ...]:
        """Plain nodes of tree degree one: the lonely leaves of the component."""
        return tuple(
            n for n in self.plain_nodes if self.tree.degree(n) == 1
        )

    @cached_property
    def leaf_credits(self) -> dict[int, Fraction]:
        return dict(self.solution.ledger.lonely_leaves)

    @cached_property
    def link_image(self) -> dict[int, tuple[Node, Node]]:
        """Where each link of the instance lands, skipping collapsed ones."""
        out: dict[int, tuple[Node, Node]] = {}
        for lid, (a, b) in enumerate(self.solution.instance.links):
            na, nb = self.node_of(a), self.node_of(b)
            if na != nb:
                out[lid] = (na, nb)
        return out

    @cached_property
    def adjacency(self) -> dict[Node, tuple[tuple[Node, int], ...]]:
        adj: dict[Node, list[tuple[Node, int]]] = {}
        for lid, (na, nb) in self.link_image.items():
            adj.setdefault(na, []).append((nb, lid))
            adj.setdefault(nb, []).append((na, lid))
        return {n: tuple(sorted(out)) for n, out in adj.items()}

    @cached_property
    def _tree_edge_ids(self) -> dict[frozenset[Node], int]:
        return {frozenset((a, b)): eid for a, b, eid in self.tree.edges}

    def is_simple_block(self, node: Node) -> bool:
        return (
            node[0] == "b"
            and self.solution.decomposition.blocks[node[1]].kind
            is BlockKind.SIMPLE
        )

    def sees_simple_block(self, node: Node) -> bool:
        """Does a tree walk from here reach a simple block before any other?"""
        seen = {node}
        queue = [node]
        while queue:
            for other, _ in self.tree.adjacency[queue.pop()]:
                if other in seen:
                    continue
                seen.add(other)
                if other[0] == "b":
                    if self.is_simple_block(other):
                        return True
                    continue
                queue.append(other)
        return False

    def witness(self, a: Node, b: Node) -> "Witness":
        """The unique tree path between two supernodes, with its credit census."""
        nodes = self.tree.tree_path(a, b)
        graph = self.solution.decomposition.graph
        chosen: list[int] = []
        for na, nb in itertools.pairwise(nodes):
            tag = graph.tag(self._tree_edge_ids[frozenset((na, nb))])
            if tag[0] == "l":
                chosen.append(tag[1])
        leaves: list[int] = []
        credit = Fraction(0)
        simple: list[int] = []
        other: list[int] = []
        for node in nodes:
            kind, key = node
            if kind == "v" and key in self.leaf_credits:
                leaves.append(key)
                credit += self.leaf_credits[key]
            elif kind == "b":
                (simple if self.is_simple_block(node) else other).append(key)
        return Witness(
            nodes, tuple(chosen), tuple(leaves), credit,
            tuple(simple), tuple(other),
        )

    def ear_fan(
        self,
        start: Node | int,
        *,
        targets: frozenset[Node] | None = None,
        forbid_links: frozenset[int] = frozenset(),
        extra_sources: Sequence[Node] = (),
    ) -> dict[Node, "PseudoEar"]:
        """All pseudo-ears out of ``start``, one shortest ear per endpoint.

        A breadth-first search walks link edges of the view; contracted
        foreign components may be traversed, nodes of the component may only
        terminate an ear.  ``extra_sources`` widens the start to a set (used
        when one side of the tree acts as a single vertex); the witness is
        then measured from whichever source the ear actually leaves.
        """
        starts = (_as_node(self, start),) + tuple(extra_sources)
        own = frozenset(starts)
        parent: dict[Node, tuple[Node, int]] = {}
        seen: set[Node] = set(own)
        hits: list[tuple[Node, Node]] = []
        queue: deque[Node] = deque(starts)
        while queue:
            node = queue.popleft()
            for other, lid in self.adjacency.get(node, ()):
                if lid in forbid_links or other in seen:
                    continue
                if other in self.component_nodes:
                    if other in own or (targets is not None and other not in targets):
                        continue
                    seen.add(other)
                    parent[other] = (node, lid)
                    hits.append((other, node))
                    continue
                seen.add(other)
                parent[other] = (node, lid)
                queue.append(other)
        fan: dict[Node, PseudoEar] = {}
        for end, _ in hits:
            route = [end]
            links: list[int] = []
            while route[-1] not in own:
                node, lid = parent[route[-1]]
                links.append(lid)
                route.append(node)
            route.reverse()
            links.reverse()
            fan[end] = PseudoEar(
                route[0], end, tuple(links), tuple(route),
                self.witness(route[0], end),
            )
        return fan


def _as_node(view: ContractedView, where: Node | int) -> Node:
    node = view.node_of(where) if isinstance(where, int) else where
    if node not in view.component_nodes:
        raise ValueError(f"{where!r} lies outside the component under view")
    return node


def contracted_view(solution: WorkingSolution, component_id: int) -> ContractedView:
    comp = solution.decomposition.components[component_id]
    if not comp.is_complex:
        raise ValueError(f"component {component_id} has no bridges to contract")
    return ContractedView(
        solution, component_id, solution.decomposition.component_tree(component_id)
    )


# -- pseudo-ears and their witnesses ----------------------------------------


@dataclass(frozen=True)
class Witness:
    """The tree path that a pseudo-ear would fold into a cycle.

    ``freed_credit`` is what the ledger gives back when that happens: the
    lonely leaves on the path stop being leaves, its chosen bridges stop
    being bridges, and its non-simple blocks dissolve into the new one.
    """

    nodes: tuple[Node, ...]
    link_bridges: tuple[int, ...]
    leaf_vertices: tuple[int, ...]
    leaf_credit: Fraction
    simple_blocks: tuple[int, ...]
    non_simple_blocks: tuple[int, ...]

    @property
    def block_count(self) -> int:
        return len(self.simple_blocks) + len(self.non_simple_blocks)

    @property
    def freed_credit(self) -> Fraction:
        return (
            self.leaf_credit
            + Fraction(3, 4) * len(self.link_bridges)
            + len(self.non_simple_blocks)
        )


@dataclass(frozen=True)
class PseudoEar:
    """A path of links leaving the component at ``u`` and re-entering at ``v``.

    ``links`` holds instance link ids in travel order; every interior stop of
    ``route`` is a contracted foreign component, visited at most once.  The
    witness is the unique tree path between the endpoints.
    """

    u: Node
    v: Node
    links: tuple[int, ...]
    route: tuple[Node, ...]
    witness: Witness

    def __post_init__(self) -> None:
        if self.u == self.v:
            raise ValueError("pseudo-ear endpoints coincide")


def find_pseudo_ear(
    view: ContractedView, u: Node | int, v: Node | int
) -> PseudoEar | None:
    """Shortest pseudo-ear between two spots of the component, if any exists.

    Deleting the rest of the component and path-searching what remains is a
    complete method: any ear avoids those nodes by definition.
    """
    nu, nv = _as_node(view, u), _as_node(view, v)
    if nu == nv:
        raise ValueError("pseudo-ear endpoints coincide")
    return view.ear_fan(nu, targets=frozenset((nv,))).get(nv)


def witness_credit_check(
    solution: WorkingSolution,
    ears: PseudoEar | tuple[PseudoEar, PseudoEar],
) -> CreditVerdict:
    """Decide whether the witness credit pays for adding the ear(s).

    A single ear needs two credits freed on its witness path; every interior
    component of the ear covers its own copy, and the new block's credit is
    the remaining debt.  A pair needs three, must be disjoint outside a
    shared far endpoint, and the witness paths must meet so a single block
    forms.
    """
    if isinstance(ears, PseudoEar):
        verdict = ears.witness.freed_credit >= 2
        return CreditVerdict.SUFFICIENT if verdict else CreditVerdict.INSUFFICIENT
    first, second = ears
    if first.u == second.u:
        return CreditVerdict.INSUFFICIENT
    shared = set(first.route) & set(second.route)
    allowed = {first.v} if first.v == second.v else set()
    if shared - allowed or set(first.links) & set(second.links):
        return CreditVerdict.INSUFFICIENT
    one, two = first.witness, second.witness
    if not set(one.nodes) & set(two.nodes):
        return CreditVerdict.INSUFFICIENT
    credits = dict(solution.ledger.lonely_leaves)
    freed = (
        sum((credits[v] for v in set(one.leaf_vertices) | set(two.leaf_vertices)),
            Fraction(0))
        + Fraction(3, 4) * len(set(one.link_bridges) | set(two.link_bridges))
        + len(set(one.non_simple_blocks) | set(two.non_simple_blocks))
    )
    return CreditVerdict.SUFFICIENT if freed >= 3 else CreditVerdict.INSUFFICIENT


# -- moves and their acceptance ---------------------------------------------


@dataclass(frozen=True)
class _Move:
    """A candidate transformation: links to add, links to drop, provenance."""

    add: frozenset[int]
    remove: frozenset[int] = frozenset()
    note: str = ""
    exceptional: bool = False


def _label(node: Node) -> str:
    return f"{node[0]}{node[1]}"


def _apply(solution: WorkingSolution, move: _Move) -> WorkingSolution:
    links = (solution.links - move.remove) | move.add
    return WorkingSolution.build(solution.instance, links)


def _phi(solution: WorkingSolution) -> tuple[int, int]:
    decomp = solution.decomposition
    return len(decomp.components), len(decomp.bridge_eids)


def _accepted(old: WorkingSolution, new: WorkingSolution, move: _Move) -> bool:
    if not check_invariants(new, prev_cost=old.cost).ok:
        return False
    if move.exceptional:
        return _phi(new)[1] < _phi(old)[1]
    return _phi(new) < _phi(old)


# -- generic ear search -----------------------------------------------------


def _ranked(fan: Iterable[PseudoEar]) -> list[PseudoEar]:
    """Most chosen bridges covered first, then most blocks, then endpoint."""
    return sorted(
        fan,
        key=lambda e: (
            -len(e.witness.link_bridges),
            -e.witness.block_count,
            e.v,
            e.links,
        ),
    )


def _single_ear_moves(
    solution: WorkingSolution,
    view: ContractedView,
    starts: Sequence[Node],
    *,
    require_credit: bool = True,
    cap: int | None = None,
) -> Iterator[_Move]:
    produced = 0
    for start in starts:
        for ear in _ranked(view.ear_fan(start).values()):
            if require_credit and (
                witness_credit_check(solution, ear) is not CreditVerdict.SUFFICIENT
            ):
                continue
            yield _Move(
                frozenset(ear.links),
                note=f"ear {_label(ear.u)}-{_label(ear.v)}",
            )
            produced += 1
            if cap is not None and produced >= cap:
                return


def _pair_moves(
    solution: WorkingSolution,
    view: ContractedView,
    starts: Sequence[Node],
) -> Iterator[_Move]:
    fans = [(s, _ranked(view.ear_fan(s).values())) for s in starts]
    for (s1, ears1), (s2, ears2) in itertools.combinations(fans, 2):
        for one in ears1:
            for two in ears2:
                if witness_credit_check(solution, (one, two)) is CreditVerdict.SUFFICIENT:
                    yield _Move(
                        frozenset(one.links) | frozenset(two.links),
                        note=(
                            f"ears {_label(one.u)}-{_label(one.v)}"
                            f"+{_label(two.u)}-{_label(two.v)}"
                        ),
                    )


def _composite_moves(
    solution: WorkingSolution,
    opener: _Move,
    anchor: int,
    *,
    unchecked_singles: int = 0,
    cap: int = 12,
) -> Iterator[_Move]:
    """Apply ``opener`` tentatively and search one follow-up move on top.

    The opener alone would not be accepted; combined with the follow-up it
    may free enough credit.  The merged move is yielded for verification
    against the original solution, so a bad opener costs nothing.
    """
    inter = _apply(solution, opener)
    ci = inter.decomposition.component_of[anchor]
    if not inter.decomposition.components[ci].is_complex:
        return
    view = contracted_view(inter, ci)
    starts = view.leaf_nodes + view.block_nodes
    follow = itertools.chain(
        _single_ear_moves(inter, view, starts),
        _pair_moves(inter, view, starts),
        _single_ear_moves(inter, view, starts, require_credit=False,
                          cap=unchecked_singles)
        if unchecked_singles
        else (),
    )
    for count, move in enumerate(follow):
        if count >= cap:
            return
        yield _Move(
            add=opener.add | move.add,
            remove=opener.remove | move.remove,
            note=f"{opener.note} then {move.note}",
            exceptional=opener.exceptional or move.exceptional,
        )


# -- exactly solved side pieces ---------------------------------------------


def _side_piece(
    instance: PapInstance,
    side_vertices: frozenset[int],
    hub_vertices: frozenset[int],
) -> frozenset[int] | None:
    """Optimal links 2-edge-connecting one side of a separator onto it.

    The separator is contracted to a single hub vertex and the small
    remainder is solved exactly, capped at :data:`SIDE_SOLVE_CAP` links.
    Returns instance link ids, or ``None`` when no small solution exists.
    """
    derived = derive_instance(
        instance, keep=side_vertices | hub_vertices, merge=[hub_vertices]
    )
    if derived is None:
        return None
    budget = SearchBudget(max_links=SIDE_SOLVE_CAP, node_limit=_SIDE_NODE_LIMIT)
    try:
        picked = exact_pap(derived.instance, budget)
    except (Infeasible, BudgetExceeded):
        return None
    return derived.lift_links(picked)


def _parts_without(instance: PapInstance, banned: frozenset[int]) -> list[frozenset[int]]:
    """Connected components of the instance graph after deleting ``banned``."""
    seen: set[int] = set(banned)
    parts: list[frozenset[int]] = []
    for root in range(instance.n):
        if root in seen:
            continue
        seen.add(root)
        bucket = [root]
        queue = [root]
        while queue:
            for w in instance.neighbors(queue.pop()):
                if w not in seen:
                    seen.add(w)
                    bucket.append(w)
                    queue.append(w)
        parts.append(frozenset(bucket))
    return parts


# -- dispatch stages --------------------------------------------------------


def _leaf_link_moves(solution: WorkingSolution) -> Iterator[_Move]:
    """A spare link joining lonely leaves of two different bridged components."""
    decomp = solution.decomposition
    leaves = {
        v
        for v, _ in solution.ledger.lonely_leaves
        if decomp.graph.degree(v) == 1
    }
    for lid in sorted(set(range(len(solution.instance.links))) - solution.links):
        a, b = solution.instance.links[lid]
        if a in leaves and b in leaves:
            ca, cb = decomp.component_of[a], decomp.component_of[b]
            if ca != cb:
                yield _Move(frozenset((lid,)), note=f"leaf link {a}-{b}")


def _closing_link_moves(
    solution: WorkingSolution, view: ContractedView
) -> Iterator[_Move]:
    """Close a lonely path inside the component with its own end-to-end link."""
    instance = solution.instance
    for node in view.leaf_nodes:
        v = node[1]
        path = instance.paths[instance.path_of[v]]
        mate = path[-1] if path[0] == v else path[0]
        if mate == v or view.node_of(mate) not in view.component_nodes:
            continue
        for lid in instance.ids_by_pair.get(link(v, mate), ()):
            if lid not in solution.links:
                yield _Move(frozenset((lid,)), note=f"closing link {v}-{mate}")
                break


def _simple_block_moves(
    solution: WorkingSolution, view: ContractedView
) -> Iterator[_Move]:
    """Moves for a component whose tree still holds a simple block."""
    seeing = [n for n in view.leaf_nodes if view.sees_simple_block(n)]
    rest = [n for n in view.leaf_nodes if n not in seeing]
    starts = seeing + rest + list(view.block_nodes)
    yield from _single_ear_moves(solution, view, starts)
    yield from _closing_link_moves(solution, view)
    yield from _pair_moves(solution, view, starts)
    expensive = [n for n in seeing if n[1] in solution.expensive_leaves]
    for node in expensive:
        fan = view.ear_fan(node)
        away = [
            ear
            for ear in _ranked(fan.values())
            if ear.v[0] != "v"
            or not solution.instance.on_same_path(node[1], ear.v[1])
        ]
        for ear in away[:3]:
            opener = _Move(
                frozenset(ear.links),
                note=f"ear {_label(ear.u)}-{_label(ear.v)}",
            )
            yield from _composite_moves(
                solution, opener, node[1], unchecked_singles=6
            )


def _non_expensive_moves(
    solution: WorkingSolution, view: ContractedView
) -> Iterator[_Move]:
    """Moves led by a lonely leaf that did not earn the expensive quarter."""
    cheap = [
        n for n in view.leaf_nodes if n[1] not in solution.expensive_leaves
    ]
    rest = [n for n in view.leaf_nodes if n not in cheap]
    starts = cheap + rest + list(view.block_nodes)
    yield from _single_ear_moves(solution, view, starts)
    yield from _pair_moves(solution, view, starts)
    yield from _swap_moves(solution, view)
    yield from _stitch_moves(solution, view)


def _swap_moves(
    solution: WorkingSolution, view: ContractedView
) -> Iterator[_Move]:
    """Re-hang the third path of a three-path chain to free its far leaf.

    The chain ``P, P', P''`` keeps its shape when the last chosen link is
    replaced by one meeting the other end of ``P''``, but ears from the now
    freed leaf can reach further back, which may unlock a pair.
    """
    layout = _linearize(view)
    if layout is None or len(layout.spans) != 3:
        return
    instance = solution.instance
    for side in (layout, layout.reversed()):
        v = side.vertices[0]
        if v in solution.expensive_leaves:
            continue
        far_prime = side.vertices[side.spans[1][1]]
        tail_start = side.vertices[side.spans[2][0]]
        tail_end = side.vertices[-1]
        swap_pair = link(far_prime, tail_end)
        lids = [
            lid
            for lid in instance.ids_by_pair.get(swap_pair, ())
            if lid not in solution.links
        ]
        if not lids:
            continue
        tail_node, freed_node = ("v", tail_end), ("v", tail_start)
        z_targets = [
            side.position[ear.v[1]] for ear in view.ear_fan(tail_node).values()
        ]
        horizon = min(z_targets) if z_targets else len(side.vertices)
        reach = [
            side.position[ear.v[1]] for ear in view.ear_fan(freed_node).values()
        ]
        if not reach or min(reach) >= horizon:
            continue
        opener = _Move(
            frozenset((lids[0],)),
            remove=frozenset((side.joints[1],)),
            note=f"swap {far_prime}-{tail_end}",
        )
        yield from _composite_moves(solution, opener, v)


def _stitch_moves(
    solution: WorkingSolution, view: ContractedView
) -> Iterator[_Move]:
    """Attach the leaf to the far end of the next path, then add an ear.

    Alone the end-to-end link frees too little credit; together with an ear
    over the extended chain it covers three chosen bridges.
    """
    layout = _linearize(view)
    if layout is None or len(layout.spans) < 4:
        return
    instance = solution.instance
    for side in (layout, layout.reversed()):
        v = side.vertices[0]
        if v in solution.expensive_leaves:
            continue
        far_prime = side.vertices[side.spans[1][1]]
        for lid in instance.ids_by_pair.get(link(v, far_prime), ()):
            if lid in solution.links:
                continue
            opener = _Move(frozenset((lid,)), note=f"stitch {v}-{far_prime}")
            yield from _composite_moves(solution, opener, v)
            break


def _block_moves(
    solution: WorkingSolution, view: ContractedView
) -> Iterator[_Move]:
    """Moves for a component whose tree holds a non-simple block."""
    starts = list(view.block_nodes) + list(view.leaf_nodes) + [
        n for n in view.plain_nodes if n not in view.leaf_nodes
    ]
    yield from _single_ear_moves(solution, view, starts)
    yield from _pair_moves(solution, view, view.block_nodes + view.leaf_nodes)
    yield from _block_exchange_moves(solution, view)


def _block_exchange_moves(
    solution: WorkingSolution, view: ContractedView
) -> Iterator[_Move]:
    """Separator-driven moves around a block whose ears all fall short.

    The longest witness out of the block ends in a corner of the component
    that the rest of the graph can only reach through the witness itself.
    Depending on what hangs there, either one extra link reattaches it, or
    its single chosen link is traded for an exactly solved side piece.
    """
    decomp = solution.decomposition
    instance = solution.instance
    for block in view.block_nodes:
        if view.is_simple_block(block):
            continue
        arms: list[tuple[frozenset[Node], Sequence[Node]]] = []
        if view.tree.degree(block) == 1:
            arms.append((frozenset(view.plain_nodes), ()))
        else:
            for branch, _ in view.tree.adjacency[block]:
                kept = _branch_nodes(view.tree, block, branch)
                far = tuple(
                    n for n in view.component_nodes if n not in kept and n != block
                )
                arms.append((frozenset(n for n in kept if n[0] == "v"), far))
        for targets, extra in arms:
            fan = view.ear_fan(block, targets=targets, extra_sources=extra)
            if not fan:
                continue
            depth = {t: len(view.tree.tree_path(block, t)) for t in fan}
            far_end = max(depth, key=lambda t: (depth[t], t))
            witness = view.witness(block, far_end)
            if any(n[0] == "b" for n in witness.nodes[1:]):
                continue
            inner = []
            for na, nb in itertools.pairwise(witness.nodes[1:]):
                tag = decomp.graph.tag(view._tree_edge_ids[frozenset((na, nb))])
                if tag[0] == "l":
                    inner.append(tag[1])
            if len(inner) != 1:
                continue
            corner = frozenset(n[1] for n in witness.nodes[1:])
            seed = decomp.blocks[block[1]].vertices
            stray = [p for p in _parts_without(instance, corner) if not p & seed]
            if not stray:
                continue
            far: frozenset[int] = frozenset().union(*stray)
            ear = fan[far_end]
            yield from _corner_moves(solution, ear, corner, far)


def _corner_moves(
    solution: WorkingSolution,
    ear: PseudoEar,
    corner: frozenset[int],
    far: frozenset[int],
) -> Iterator[_Move]:
    instance = solution.instance
    chosen_inside = [
        lid
        for lid in sorted(solution.links)
        if instance.links[lid][0] in far and instance.links[lid][1] in far
    ]
    degree: dict[int, int] = {v: 0 for v in far}
    for _, a, b in instance.path_edges():
        if a in far and b in far:
            degree[a] += 1
            degree[b] += 1
    for lid in chosen_inside:
        a, b = instance.links[lid]
        degree[a] += 1
        degree[b] += 1
    ends = sorted(v for v, d in degree.items() if d <= 1)
    if len(chosen_inside) == 0:
        for z in ends:
            for lid, other in instance.link_adjacency[z]:
                if other in corner and lid not in solution.links:
                    yield _Move(
                        frozenset(ear.links) | {lid},
                        note=f"ear {_label(ear.u)}-{_label(ear.v)} plus {z}-{other}",
                    )
    elif len(chosen_inside) == 1:
        piece = _side_piece(instance, far, corner)
        if piece is not None:
            yield _Move(
                add=frozenset(ear.links) | piece,
                remove=frozenset((chosen_inside[0],)),
                note=f"ear {_label(ear.u)}-{_label(ear.v)} trade {chosen_inside[0]}",
                exceptional=True,
            )


def _branch_nodes(tree: ComponentTree, root: Node, first: Node) -> set[Node]:
    """Nodes of the subtree hanging off ``root`` through ``first``."""
    seen = {root, first}
    queue = [first]
    while queue:
        for other, _ in tree.adjacency[queue.pop()]:
            if other not in seen:
                seen.add(other)
                queue.append(other)
    seen.discard(root)
    return seen


# -- lonely path components -------------------------------------------------


@dataclass(frozen=True)
class _PathLayout:
    """A blockless component laid out left to right.

    ``spans`` are (first, last) positions of each constituent path;
    ``joints`` the chosen link between consecutive paths.
    """

    vertices: tuple[int, ...]
    spans: tuple[tuple[int, int], ...]
    joints: tuple[int, ...]
    position: dict[int, int] = field(repr=False)

    def reversed(self) -> "_PathLayout":
        last = len(self.vertices) - 1
        spans = tuple(
            (last - b, last - a) for a, b in reversed(self.spans)
        )
        flipped = tuple(reversed(self.vertices))
        return _PathLayout(
            flipped, spans, tuple(reversed(self.joints)),
            {v: i for i, v in enumerate(flipped)},
        )

    def span_of(self, pos: int) -> int:
        for i, (a, b) in enumerate(self.spans):
            if a <= pos <= b:
                return i
        raise ValueError(f"position {pos} outside the layout")


def _linearize(view: ContractedView) -> _PathLayout | None:
    """Lay out a component that is a chain of whole paths, else ``None``."""
    if view.block_nodes or not view.plain_nodes:
        return None
    ends = [n for n in view.plain_nodes if view.tree.degree(n) <= 1]
    if len(view.plain_nodes) == 1:
        order = [view.plain_nodes[0]]
    else:
        if len(ends) != 2:
            return None
        order = [min(ends)]
        prev: Node | None = None
        while True:
            nxt = [
                n for n, _ in view.tree.adjacency[order[-1]] if n != prev
            ]
            if not nxt:
                break
            prev = order[-1]
            order.append(nxt[0])
    if len(order) != len(view.plain_nodes):
        return None
    vertices = tuple(n[1] for n in order)
    instance = view.solution.instance
    graph = view.solution.decomposition.graph
    spans: list[tuple[int, int]] = []
    joints: list[int] = []
    start = 0
    for i in range(1, len(vertices) + 1):
        if i == len(vertices) or not instance.on_same_path(
            vertices[i - 1], vertices[i]
        ):
            spans.append((start, i - 1))
            start = i
            if i < len(vertices):
                eid = view._tree_edge_ids[
                    frozenset((("v", vertices[i - 1]), ("v", vertices[i])))
                ]
                tag = graph.tag(eid)
                if tag[0] != "l":
                    return None
                joints.append(tag[1])
    for (a, b), path in zip(
        spans, (instance.path_of[vertices[s]] for s, _ in spans)
    ):
        if b - a + 1 != len(instance.paths[path]):
            return None
    return _PathLayout(
        vertices, tuple(spans), tuple(joints),
        {v: i for i, v in enumerate(vertices)},
    )


def _path_moves(
    solution: WorkingSolution, view: ContractedView
) -> Iterator[_Move]:
    """Moves for a chain of lonely paths whose leaves are all expensive."""
    starts = list(view.leaf_nodes) + [
        n for n in view.plain_nodes if n not in view.leaf_nodes
    ]
    yield from _single_ear_moves(solution, view, starts)
    yield from _pair_moves(solution, view, view.leaf_nodes)
    layout = _linearize(view)
    if layout is None:
        return
    fans = {n: view.ear_fan(n) for n in view.plain_nodes}
    yield from _chain_moves(layout, fans)
    yield from _path_exchange_moves(solution, layout, fans)


def _chain_moves(
    layout: _PathLayout,
    fans: dict[Node, dict[Node, PseudoEar]],
) -> Iterator[_Move]:
    """Cover the whole chain with few overlapping ears, greedily.

    Each ear spans an interval of positions; consecutive picks must share a
    vertex so one block forms.  The leaf credits and every chosen joint pay
    for the ears as long as their number stays under the budget.
    """
    spans = len(layout.spans)
    budget = (6 + 3 * (spans - 1)) // 4
    intervals: list[tuple[int, int, PseudoEar]] = []
    for node, fan in fans.items():
        a = layout.position[node[1]]
        for ear in fan.values():
            b = layout.position[ear.v[1]]
            intervals.append((min(a, b), max(a, b), ear))
    last = len(layout.vertices) - 1
    chosen: list[PseudoEar] = []
    covered = -1
    while covered < last and len(chosen) < budget:
        used: set[Node] = set()
        for prior in chosen:
            used.update(prior.route[1:-1])
        best: tuple[int, PseudoEar] | None = None
        best_key: tuple[int, int, int, tuple[int, ...]] | None = None
        for lo, hi, ear in intervals:
            if hi <= covered:
                continue
            if covered < 0:
                if lo != 0:
                    continue
            elif lo > covered:
                continue
            overlap = len(used & set(ear.route[1:-1]))
            key = (hi, -overlap, -len(ear.links), ear.links)
            if best_key is None or key > best_key:
                best_key, best = key, (hi, ear)
        if best is None:
            return
        chosen.append(best[1])
        covered = best[0]
    if covered >= last and 2 <= len(chosen) <= budget:
        add = frozenset().union(*(frozenset(c.links) for c in chosen))
        labels = "+".join(
            f"{_label(c.u)}-{_label(c.v)}" for c in chosen
        )
        yield _Move(add, note=f"chain {labels}")


def _path_exchange_moves(
    solution: WorkingSolution,
    layout: _PathLayout,
    fans: dict[Node, dict[Node, PseudoEar]],
) -> Iterator[_Move]:
    """Trade chain links for an exact side piece when ears stall mid-chain.

    The stalled frontiers pin a separator segment; whichever side admits a
    small exact augmentation is cut off and rejoined through it.
    """
    spans = len(layout.spans)
    if spans < 4:
        return
    instance = solution.instance
    forward_need = 2 if spans == 4 else 3
    for side in (layout, layout.reversed()):
        reach = _frontier(side, fans, forward_need)
        if reach is None:
            continue
        if any(side.span_of(p) != i + 1 for i, (p, _) in enumerate(reach)):
            continue
        last = len(side.vertices) - 1
        if spans >= 6:
            left, right = reach[1][0], reach[2][0]
            removed = frozenset(side.joints[:2])
            ears: tuple[PseudoEar, ...] = ()
            keep_head = True
        else:
            mirror = side.reversed()
            back = _frontier(mirror, fans, 2)
            if back is None:
                continue
            if any(mirror.span_of(p) != i + 1 for i, (p, _) in enumerate(back)):
                continue
            left, right = last - back[1][0], reach[-1][0]
            ears = tuple(ear for _, ear in reach)
            removed = frozenset((side.joints[forward_need],))
            keep_head = False
        if left > right:
            continue
        segment = frozenset(side.vertices[left : right + 1])
        parts = _parts_without(instance, segment)
        head, tail = side.vertices[0], side.vertices[-1]
        near: frozenset[int] = frozenset().union(*(p for p in parts if head in p))
        if tail in near:
            continue
        kept = near if keep_head else frozenset(range(instance.n)) - segment - near
        piece = _side_piece(instance, kept, segment)
        if piece is None:
            continue
        add = piece.union(*(frozenset(e.links) for e in ears))
        yield _Move(
            add=add,
            remove=removed,
            note=f"chain exchange over {len(segment)} separator vertices",
            exceptional=True,
        )


def _frontier(
    side: _PathLayout,
    fans: dict[Node, dict[Node, PseudoEar]],
    need: int,
) -> list[tuple[int, PseudoEar]] | None:
    """Greedy reach steps along the chain: from the leaf, then from anything
    at or before each frontier in turn, each step strictly advancing."""
    out: list[tuple[int, PseudoEar]] = []
    limit = 0
    for _ in range(need):
        best: tuple[int, int, PseudoEar] | None = None
        for node, fan in fans.items():
            start = side.position[node[1]]
            if start > limit:
                continue
            for ear in fan.values():
                hi = side.position[ear.v[1]]
                if best is None or (hi, -start, ear.links) > (
                    best[0], -best[1], best[2].links
                ):
                    best = (hi, start, ear)
        if best is None or best[0] <= limit:
            return None
        out.append((best[0], best[2]))
        limit = best[0]
    return out


def _trivial_moves(
    solution: WorkingSolution, view: ContractedView
) -> Iterator[_Move]:
    """Moves for a bare path component: ring it through its neighbours."""
    if len(view.leaf_nodes) < 2:
        return
    head, tail = view.leaf_nodes[0], view.leaf_nodes[-1]
    yield from _single_ear_moves(solution, view, [head])
    closing = frozenset(
        solution.instance.ids_by_pair.get(link(head[1], tail[1]), ())
    )
    fan = view.ear_fan(head, forbid_links=closing)
    around = fan.get(tail)
    if around is None:
        return
    opener = _Move(
        frozenset(around.links),
        note=f"ear {_label(head)}-{_label(tail)}",
    )
    yield from _composite_moves(solution, opener, head[1])


# -- the covering step ------------------------------------------------------

_HANDLERS = {
    "simple-block": _simple_block_moves,
    "non-expensive-leaf": _non_expensive_moves,
    "block": _block_moves,
    "path": _path_moves,
    "trivial": _trivial_moves,
}


def _dispatch(solution: WorkingSolution) -> tuple[str, list[int]]:
    decomp = solution.decomposition
    bridged = [
        ci for ci, comp in enumerate(decomp.components) if comp.is_complex
    ]
    simple = [
        ci
        for ci in bridged
        if any(
            decomp.blocks[b].kind is BlockKind.SIMPLE
            for b in decomp.components[ci].block_ids
        )
    ]
    if simple:
        return "simple-block", simple
    cheap_leaf = [
        ci
        for ci in bridged
        if not decomp.components[ci].is_trivial
        and any(
            v not in solution.expensive_leaves
            for v in decomp.components[ci].leaves
        )
    ]
    if cheap_leaf:
        return "non-expensive-leaf", cheap_leaf
    blocked = [ci for ci in bridged if decomp.components[ci].block_ids]
    if blocked:
        return "block", blocked
    chained = [ci for ci in bridged if not decomp.components[ci].is_trivial]
    if chained:
        return "path", chained
    return "trivial", bridged


def cover_step(solution: WorkingSolution) -> WorkingSolution:
    """Apply one bridge-covering transformation.

    Dispatches on the most constrained structure present: a spare link
    between lonely leaves of two components, then components with simple
    blocks, non-expensive leaves, non-simple blocks, chains of lonely paths
    and finally bare paths.  The returned solution has fewer components, or
    as many components and fewer bridges; its cost never exceeds the input's
    and the degree and block-size invariants still hold.  Raises
    :class:`NoProgress` when no candidate move survives verification and
    ``ValueError`` when there is no bridge to cover.
    """
    before = _phi(solution)
    if before[1] == 0:
        raise ValueError("solution has no bridges to cover")
    for move in _leaf_link_moves(solution):
        after = _apply(solution, move)
        if _accepted(solution, after, move):
            _log_step("leaf-link", move, before, _phi(after))
            return after
    stage, component_ids = _dispatch(solution)
    handler = _HANDLERS[stage]
    for ci in component_ids:
        view = contracted_view(solution, ci)
        for move in handler(solution, view):
            after = _apply(solution, move)
            if _accepted(solution, after, move):
                _log_step(stage, move, before, _phi(after))
                return after
    shapes = ", ".join(
        f"component {ci} (leaves {tuple(solution.decomposition.components[ci].leaves)},"
        f" blocks {tuple(solution.decomposition.components[ci].block_ids)})"
        for ci in component_ids
    )
    raise NoProgress(stage, f"no admissible move for {shapes}")


def _log_step(
    stage: str, move: _Move, before: tuple[int, int], after: tuple[int, int]
) -> None:
    logger.info(
        "cover_step %s [%s]: components %d -> %d, bridges %d -> %d%s",
        stage,
        move.note,
        before[0],
        after[0],
        before[1],
        after[1],
        " (exchange)" if move.exceptional else "",
    )


def bridge_cover(solution: WorkingSolution) -> WorkingSolution:
    """Repeat :func:`cover_step` until the solution is bridgeless.

    Bridgeless input comes back unchanged.  Progress is certified by the
    lexicographic potential (components, bridges), so the number of steps is
    at most their initial sum; exceeding it means a step cycled, which is
    reported as a hard error rather than looped on.  :class:`NoProgress`
    from a step propagates.
    """
    current = solution
    budget = sum(_phi(current))
    steps = 0
    while current.decomposition.bridge_eids:
        if steps >= budget:
            raise RuntimeError(
                f"bridge covering did not settle within {budget} steps"
            )
        after = cover_step(current)
        assert after.cost <= current.cost
        current = after
        steps += 1
    return current
