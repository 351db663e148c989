"""Starting solutions: the credit scheme and three track-packing heuristics.

The pipeline opens by packing tracks in the cover relaxation, realizing the
winners as source links, and banking credits on the resulting subgraph.  The
credit ledger is the potential function the later repair stages spend: each
mutation must keep ``cost(H) = |S| + credits(H)`` from growing, so the ratio
certified for the starting solution carries through to the final one.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

from .core import (
    BlockDecomposition,
    BlockKind,
    ComponentKind,
    Link,
    PapInstance,
    block_decompose,
    degenerate_paths,
    link,
)
from .matching import MatchingProblem, max_matching, max_matching_bounded_expensive
from .relax import EcpcInstance, Track, enumerate_tracks, make_track, realize_tracks

__all__ = [
    "TARGET_RATIO",
    "Candidate",
    "CandidateStats",
    "CreditLedger",
    "InvariantReport",
    "InvariantViolation",
    "WorkingSolution",
    "algorithm_a",
    "algorithm_b",
    "algorithm_c",
    "check_invariants",
    "credits",
    "expensive_cross_pairs",
    "expensive_leaf_vertices",
    "fap_style_bound_check",
    "is_expensive_link",
    "matching_overlap",
    "packing_heuristic",
    "starting_candidates",
    "starting_solution",
]

# The approximation factor the pipeline guarantees against the exact optimum.
TARGET_RATIO = Fraction("1.9412")


class InvariantViolation(RuntimeError):
    """A solution broke a structural invariant the pipeline relies on."""


# -- expensive links and leaves --------------------------------------------


def _path_mate(instance: PapInstance, v: int) -> int:
    a, b = instance.path_ends(instance.path_of[v])
    return b if v == a else a


def _guards_mate(instance: PapInstance, u: int, u2: int) -> bool:
    """Does the link ``u u2`` pin down the neighborhood of ``u``'s path mate?

    With ``v`` the other endpoint of ``u``'s path and ``v2`` the other
    endpoint of ``u2``'s path, requires every neighbor of ``v`` to lie on the
    two paths while ``v2`` itself stays out of reach.
    """
    v = _path_mate(instance, u)
    v2 = _path_mate(instance, u2)
    scope = set(instance.paths[instance.path_of[u]])
    scope.update(instance.paths[instance.path_of[u2]])
    scope.discard(v2)
    return instance.neighbors(v) <= scope


def is_expensive_link(instance: PapInstance, lid: int) -> bool:
    """True if the link traps a path mate of one of its ends.

    Only links joining endpoints of two distinct paths qualify.  The link is
    expensive when, on at least one side, the mate of the linked endpoint has
    all its neighbors confined to the two paths and cannot reach the far
    mate on the other path.
    """
    a, b = instance.links[lid]
    if not (instance.is_endpoint(a) and instance.is_endpoint(b)):
        return False
    if instance.on_same_path(a, b):
        return False
    return _guards_mate(instance, a, b) or _guards_mate(instance, b, a)


def expensive_leaf_vertices(decomp: BlockDecomposition) -> frozenset[int]:
    """Leaves whose path mate is held by an expensive bridge link.

    A leaf ``v`` is expensive when the other endpoint ``u`` of its path
    carries a bridge link ``u u2`` to another path's endpoint and that link
    is expensive on the ``v`` side.
    """
    inst = decomp.instance
    out: set[int] = set()
    for comp in decomp.components:
        for v in comp.leaves:
            if not inst.is_endpoint(v):
                continue
            u = _path_mate(inst, v)
            for lid, u2 in inst.link_adjacency[u]:
                if lid not in decomp.bridge_link_ids or lid not in decomp.sol:
                    continue
                if not inst.is_endpoint(u2) or inst.on_same_path(u, u2):
                    continue
                if _guards_mate(inst, u, u2):
                    out.add(v)
                    break
    return frozenset(out)


# -- the credit ledger -----------------------------------------------------


@dataclass(frozen=True)
class CreditLedger:
    """Credit grants for one solution graph, keyed by decomposition ids.

    Lonely leaves of bridged components hold 1, 5/4 or 3/2; every bridge
    link 3/4; every bridged component 1; every non-simple block of such a
    component 1; every 2-edge-connected component 3/2 or 2.
    """

    lonely_leaves: tuple[tuple[int, Fraction], ...]
    bridge_links: tuple[tuple[int, Fraction], ...]
    complex_components: tuple[tuple[int, Fraction], ...]
    non_simple_blocks: tuple[tuple[int, Fraction], ...]
    two_ec_components: tuple[tuple[int, Fraction], ...]

    def subtotals(self) -> dict[str, Fraction]:
        return {
            "lonely_leaves": sum((c for _, c in self.lonely_leaves), Fraction(0)),
            "bridge_links": sum((c for _, c in self.bridge_links), Fraction(0)),
            "complex_components": sum(
                (c for _, c in self.complex_components), Fraction(0)
            ),
            "non_simple_blocks": sum(
                (c for _, c in self.non_simple_blocks), Fraction(0)
            ),
            "two_ec_components": sum(
                (c for _, c in self.two_ec_components), Fraction(0)
            ),
        }

    @cached_property
    def total(self) -> Fraction:
        return sum(self.subtotals().values(), Fraction(0))


def _sees_simple_block(decomp: BlockDecomposition, ci: int, v: int) -> bool:
    """Can the leaf reach a simple block without crossing a non-simple one?"""
    tree = decomp.component_tree(ci)
    start = ("v", v)
    seen = {start}
    queue = [start]
    while queue:
        node = queue.pop(0)
        for other, _ in tree.adjacency[node]:
            if other in seen:
                continue
            seen.add(other)
            if other[0] == "b":
                if decomp.blocks[other[1]].kind is BlockKind.SIMPLE:
                    return True
                continue  # a non-simple block blocks the path
            queue.append(other)
    return False


def credits(
    decomp: BlockDecomposition,
    *,
    expensive_leaves: frozenset[int] | None = None,
    degenerate_components: frozenset[int] | None = None,
) -> CreditLedger:
    """Grant credits to leaves, bridges, components and blocks.

    Leaves of a bridged component start at 1 and gain 1/4 for being
    expensive and 1/4 for seeing a simple block past no non-simple one.  A
    2-edge-connected component holds 2 when it has three or more links or
    contains a degenerate path, else 3/2; a lone closed path counts as the
    small case.  Both flag sets are recomputed from the decomposition when
    not supplied.
    """
    if expensive_leaves is None:
        expensive_leaves = expensive_leaf_vertices(decomp)
    if degenerate_components is None:
        degenerate = degenerate_paths(decomp.instance).keys()
        degenerate_components = frozenset(
            ci
            for ci, comp in enumerate(decomp.components)
            if comp.path_ids & degenerate
        )

    leaves: list[tuple[int, Fraction]] = []
    bridges: list[tuple[int, Fraction]] = []
    complexes: list[tuple[int, Fraction]] = []
    blocks: list[tuple[int, Fraction]] = []
    cycles: list[tuple[int, Fraction]] = []

    for ci, comp in enumerate(decomp.components):
        if comp.is_complex:
            complexes.append((ci, Fraction(1)))
            for v in comp.leaves:
                amount = Fraction(1)
                if v in expensive_leaves:
                    amount += Fraction(1, 4)
                if _sees_simple_block(decomp, ci, v):
                    amount += Fraction(1, 4)
                leaves.append((v, amount))
            for bid in comp.block_ids:
                if decomp.blocks[bid].kind is not BlockKind.SIMPLE:
                    blocks.append((bid, Fraction(1)))
        else:
            rich = comp.kind is ComponentKind.LARGE or ci in degenerate_components
            cycles.append((ci, Fraction(2) if rich else Fraction(3, 2)))

    for lid in sorted(decomp.bridge_link_ids):
        bridges.append((lid, Fraction(3, 4)))

    return CreditLedger(
        tuple(leaves),
        tuple(bridges),
        tuple(complexes),
        tuple(blocks),
        tuple(cycles),
    )


# -- working solutions -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class WorkingSolution:
    """A link set together with its decomposition and credit ledger."""

    instance: PapInstance
    links: frozenset[int]
    decomposition: BlockDecomposition = field(repr=False)
    ledger: CreditLedger = field(repr=False)
    expensive_leaves: frozenset[int]
    degenerate_components: frozenset[int]

    @classmethod
    def build(
        cls, instance: PapInstance, links: Iterable[int | Link]
    ) -> "WorkingSolution":
        ids = instance.to_ids(links)
        decomp = block_decompose(instance, ids)
        expensive = expensive_leaf_vertices(decomp)
        degenerate = degenerate_paths(instance).keys()
        flagged = frozenset(
            ci
            for ci, comp in enumerate(decomp.components)
            if comp.path_ids & degenerate
        )
        ledger = credits(
            decomp, expensive_leaves=expensive, degenerate_components=flagged
        )
        return cls(instance, ids, decomp, ledger, expensive, flagged)

    @property
    def cost(self) -> Fraction:
        return self.ledger.total + len(self.links)


@dataclass(frozen=True)
class InvariantReport:
    """Outcome of the three structural checks on a working solution."""

    cost_ok: bool | None
    lonely_ok: bool
    block_ok: bool
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.cost_ok is not False and self.lonely_ok and self.block_ok


def check_invariants(
    solution: WorkingSolution,
    *,
    prev_cost: Fraction | int | None = None,
    exact_opt: int | None = None,
) -> InvariantReport:
    """Check the cost, lonely-degree and block-content invariants.

    The cost check compares against ``prev_cost`` (monotone descent) and
    against ``TARGET_RATIO * exact_opt`` when either is given; with neither,
    ``cost_ok`` is ``None``.  The other two always run: lonely vertices keep
    degree at most two and simple blocks sit inside bridged components with
    tree degree exactly two and no two of them adjacent; non-simple blocks
    must swallow two whole paths.
    """
    decomp = solution.decomposition
    inst = solution.instance
    failures: list[str] = []

    cost_ok: bool | None = None
    if prev_cost is not None:
        cost_ok = solution.cost <= prev_cost
        if not cost_ok:
            failures.append(f"cost rose to {solution.cost} from {prev_cost}")
    if exact_opt is not None:
        bound = TARGET_RATIO * exact_opt
        within = solution.cost <= bound
        if not within:
            failures.append(f"cost {solution.cost} exceeds {bound}")
        cost_ok = within if cost_ok is None else (cost_ok and within)

    lonely_ok = True
    for v in sorted(decomp.lonely):
        d = decomp.graph.degree(v)
        if d > 2:
            lonely_ok = False
            failures.append(f"lonely vertex {v} has degree {d}")
    for ci, comp in enumerate(decomp.components):
        simple = [
            bid
            for bid in comp.block_ids
            if decomp.blocks[bid].kind is BlockKind.SIMPLE
        ]
        if not comp.is_complex:
            for bid in simple:
                lonely_ok = False
                failures.append(f"simple block {bid} outside any bridged component")
            continue
        tree = decomp.component_tree(ci)
        for bid in simple:
            d = tree.degree(("b", bid))
            if d != 2:
                lonely_ok = False
                failures.append(f"simple block {bid} has tree degree {d}")
        for a, b, _ in tree.edges:
            if (
                a[0] == "b"
                and b[0] == "b"
                and decomp.blocks[a[1]].kind is BlockKind.SIMPLE
                and decomp.blocks[b[1]].kind is BlockKind.SIMPLE
            ):
                lonely_ok = False
                failures.append(f"simple blocks {a[1]} and {b[1]} are adjacent")

    block_ok = True
    for bid, blk in enumerate(decomp.blocks):
        if blk.kind is BlockKind.SIMPLE:
            continue
        whole = [
            pi
            for pi in {inst.path_of[v] for v in blk.vertices}
            if blk.vertices.issuperset(inst.paths[pi])
        ]
        if len(whole) < 2:
            block_ok = False
            failures.append(f"non-simple block {bid} holds {len(whole)} whole paths")

    return InvariantReport(cost_ok, lonely_ok, block_ok, tuple(failures))


# -- bounded-swap set packing ----------------------------------------------


def packing_heuristic(
    universe: Iterable[int],
    sets: Sequence[Iterable[int]],
    *,
    swap_depth: int = 2,
) -> tuple[int, ...]:
    """Pack disjoint sets greedily, then improve by bounded swaps.

    Each set must have one to four elements drawn from ``universe``; repeats
    are allowed.  After one greedy pass in the given order, swap rounds
    remove up to ``swap_depth`` chosen sets and insert one set more than
    they removed.  Deeper rounds start from the shallower fixpoint, so the
    packing value never decreases as ``swap_depth`` grows.  Returns the
    chosen indices in increasing order.
    """
    if swap_depth < 0:
        raise ValueError("swap_depth must be nonnegative")
    elems = frozenset(universe)
    families = [frozenset(s) for s in sets]
    by_element: dict[int, list[int]] = {e: [] for e in elems}
    for i, s in enumerate(families):
        if not s:
            raise ValueError(f"set {i} is empty")
        if len(s) > 4:
            raise ValueError(f"set {i} has {len(s)} elements, more than four")
        if not s <= elems:
            raise ValueError(f"set {i} reaches outside the universe")
        for e in s:
            by_element[e].append(i)

    chosen: list[int] = []
    used: set[int] = set()
    for i, s in enumerate(families):
        if not s & used:
            chosen.append(i)
            used |= s

    for width in range(1, swap_depth + 1):
        while _swap_once(families, by_element, elems, chosen, used, width):
            pass
    return tuple(sorted(chosen))


def _swap_once(
    families: list[frozenset[int]],
    by_element: dict[int, list[int]],
    elems: frozenset[int],
    chosen: list[int],
    used: set[int],
    width: int,
) -> bool:
    """Apply the first improving swap of up to ``width`` removals, if any."""
    free = elems - used
    in_play = set(chosen)
    for t in range(width + 1):
        for removal in itertools.combinations(list(chosen), t):
            avail = set(free)
            for r in removal:
                avail |= families[r]
            if len(avail) < 2 * (t + 1):
                continue  # too little room for t + 1 disjoint pairs
            picked = _fill_disjoint(families, by_element, in_play, avail, t + 1)
            if picked is None:
                continue
            for r in removal:
                chosen.remove(r)
                used -= families[r]
            for i in picked:
                chosen.append(i)
                used |= families[i]
            return True
    return False


def _fill_disjoint(
    families: list[frozenset[int]],
    by_element: dict[int, list[int]],
    blocked: set[int],
    avail: set[int],
    need: int,
) -> list[int] | None:
    """Find ``need`` pairwise-disjoint unchosen sets inside ``avail``."""
    fits = sorted(
        {
            i
            for e in avail
            for i in by_element[e]
            if i not in blocked and families[i] <= avail
        }
    )
    picked: list[int] = []

    def grow(start: int, room: frozenset[int]) -> bool:
        if len(picked) == need:
            return True
        for j in range(start, len(fits)):
            s = families[fits[j]]
            if s <= room:
                picked.append(fits[j])
                if grow(j + 1, room - s):
                    return True
                picked.pop()
        return False

    return picked if grow(0, frozenset(avail)) else None


# -- the three track heuristics --------------------------------------------


def _cross_pairs(ecpc: EcpcInstance) -> tuple[Link, ...]:
    """Distinct endpoint-to-endpoint pairs between different paths."""
    ends = ecpc.endpoint_vertices
    return tuple(
        sorted(
            {
                pr
                for pr in ecpc.links
                if pr[0] in ends and pr[1] in ends and pr[0] // 3 != pr[1] // 3
            }
        )
    )


def expensive_cross_pairs(
    instance: PapInstance, ecpc: EcpcInstance
) -> frozenset[Link]:
    """Endpoint pairs of the relaxation whose source link is expensive."""
    ends = ecpc.endpoint_vertices
    out: set[Link] = set()
    for lid, pap in enumerate(ecpc.pap_link):
        if pap is None:
            continue
        u, v = ecpc.links[lid]
        if u not in ends or v not in ends or u // 3 == v // 3:
            continue
        if is_expensive_link(instance, pap):
            out.add(link(u, v))
    return frozenset(out)


@lru_cache(maxsize=8)
def _short_tracks(ecpc: EcpcInstance) -> tuple[Track, ...]:
    return enumerate_tracks(ecpc, 3)


def _pack_residual(
    ecpc: EcpcInstance, matched: Iterable[Link], swap_depth: int
) -> list[Track]:
    """Second stage shared by the matching-first heuristics.

    Packs three-link tracks whose endpoint footprint avoids every matched
    vertex.
    """
    taken = {v for pr in matched for v in pr}
    residual = ecpc.endpoint_vertices - taken
    pool = [
        t
        for t in _short_tracks(ecpc)
        if len(t.q_links) == 2 and t.endpoint_set() <= residual
    ]
    chosen = packing_heuristic(
        residual, [t.endpoint_set() for t in pool], swap_depth=swap_depth
    )
    return [pool[i] for i in chosen]


def _track_key(track: Track) -> tuple[int, ...]:
    return track.q_vertices


def algorithm_a(ecpc: EcpcInstance, *, swap_depth: int = 2) -> tuple[Track, ...]:
    """Maximum matching on cross pairs, then a packing on what remains."""
    problem = MatchingProblem(ecpc.n, _cross_pairs(ecpc))
    matched = max_matching(problem)
    tracks = [make_track(ecpc, pr) for pr in sorted(matched)]
    tracks.extend(_pack_residual(ecpc, matched, swap_depth))
    return tuple(sorted(tracks, key=_track_key))


def algorithm_b(
    ecpc: EcpcInstance,
    guess: int,
    *,
    expensive: frozenset[Link] = frozenset(),
    swap_depth: int = 2,
) -> tuple[Track, ...]:
    """Like the matching-first heuristic, but capping expensive pairs.

    The first stage takes a maximum matching among those using at most
    ``guess`` pairs from ``expensive`` (as computed by
    ``expensive_cross_pairs``); the second stage is unchanged.
    """
    if guess < 0:
        raise ValueError("guess must be nonnegative")
    pairs = _cross_pairs(ecpc)
    problem = MatchingProblem(
        ecpc.n, pairs, expensive=expensive & frozenset(pairs)
    )
    matched = max_matching_bounded_expensive(problem, guess)
    tracks = [make_track(ecpc, pr) for pr in sorted(matched)]
    tracks.extend(_pack_residual(ecpc, matched, swap_depth))
    return tuple(sorted(tracks, key=_track_key))


def algorithm_c(ecpc: EcpcInstance, *, swap_depth: int = 2) -> tuple[Track, ...]:
    """One packing over all tracks of one or three links."""
    pool = _short_tracks(ecpc)
    chosen = packing_heuristic(
        ecpc.endpoint_vertices,
        [t.endpoint_set() for t in pool],
        swap_depth=swap_depth,
    )
    return tuple(sorted((pool[i] for i in chosen), key=_track_key))


# -- candidates and selection ----------------------------------------------


@dataclass(frozen=True)
class CandidateStats:
    """Track and leaf counts for one heuristic run.

    ``match`` counts single-link tracks, ``pack`` three-link tracks;
    ``leaves`` the endpoints left on no track, of which
    ``expensive_leaves`` are expensive.  ``match_overlap`` splits the
    single-link tracks by how many of their two ends touch a reference
    packing's single-link tracks; it stays ``None`` until a reference is
    chosen.
    """

    family: str
    guess: int | None
    match: int
    pack: int
    leaves: int
    expensive_leaves: int
    match_overlap: tuple[int, int, int] | None = None

    def __post_init__(self) -> None:
        if self.family not in ("a", "b", "c"):
            raise ValueError(f"unknown family {self.family!r}")
        if min(self.match, self.pack, self.leaves) < 0:
            raise ValueError("counts must be nonnegative")
        if not 0 <= self.expensive_leaves <= self.leaves:
            raise ValueError("expensive leaves must be among the leaves")
        if self.match_overlap is not None and sum(self.match_overlap) != self.match:
            raise ValueError("overlap split must sum to the match count")

    def with_overlap(self, reference: Sequence[Track], tracks: Sequence[Track]):
        return replace(self, match_overlap=matching_overlap(tracks, reference))


def matching_overlap(
    tracks: Sequence[Track], reference: Sequence[Track]
) -> tuple[int, int, int]:
    """Split single-link tracks by ends shared with a reference packing."""
    covered = {
        v for t in reference if t.size == 1 for v in t.q_vertices
    }
    split = [0, 0, 0]
    for t in tracks:
        if t.size == 1:
            split[len(set(t.q_vertices) & covered)] += 1
    return (split[0], split[1], split[2])


@dataclass(frozen=True, eq=False)
class Candidate:
    """One heuristic's output: its tracks, realized solution and stats."""

    family: str
    guess: int | None
    tracks: tuple[Track, ...]
    solution: WorkingSolution
    stats: CandidateStats

    @property
    def cost(self) -> Fraction:
        return self.solution.cost

    @property
    def links(self) -> frozenset[int]:
        return self.solution.links


def _realize(
    instance: PapInstance,
    ecpc: EcpcInstance,
    family: str,
    guess: int | None,
    tracks: tuple[Track, ...],
) -> Candidate:
    solution = WorkingSolution.build(instance, realize_tracks(ecpc, tracks))
    leaves = sum(len(c.leaves) for c in solution.decomposition.components)
    stats = CandidateStats(
        family=family,
        guess=guess,
        match=sum(1 for t in tracks if t.size == 1),
        pack=sum(1 for t in tracks if t.size == 3),
        leaves=leaves,
        expensive_leaves=len(solution.expensive_leaves),
    )
    return Candidate(family, guess, tracks, solution, stats)


def starting_candidates(
    instance: PapInstance,
    ecpc: EcpcInstance,
    *,
    swap_depth: int = 2,
) -> tuple[Candidate, ...]:
    """Run every heuristic: one a-run, one b-run per guess, one c-run.

    The b-runs sweep all caps from 0 to the path count; the cap-0 run
    coincides with the a-run when no pair is expensive, and both are kept.
    """
    expensive = expensive_cross_pairs(instance, ecpc)
    out = [_realize(instance, ecpc, "a", None, algorithm_a(ecpc, swap_depth=swap_depth))]
    for q in range(len(instance.paths) + 1):
        tracks = algorithm_b(ecpc, q, expensive=expensive, swap_depth=swap_depth)
        out.append(_realize(instance, ecpc, "b", q, tracks))
    out.append(_realize(instance, ecpc, "c", None, algorithm_c(ecpc, swap_depth=swap_depth)))
    return tuple(out)


def _selection_key(instance: PapInstance, cand: Candidate):
    return (cand.cost, len(cand.links), instance.sorted_pairs(cand.links))


def starting_solution(
    instance: PapInstance, *, swap_depth: int = 2
) -> WorkingSolution:
    """Best realized heuristic output by cost, as the pipeline's seed.

    Builds the shadow-complete relaxation, runs all the heuristics, realizes
    each track set as source links, and returns the cheapest solution; ties
    break toward fewer links, then the lexicographically first link set.
    The winner is checked against the lonely-degree and block-content
    invariants before being returned.
    """
    from .relax import build_2ecpc, shadow_complete

    ecpc = shadow_complete(build_2ecpc(instance))
    cands = starting_candidates(instance, ecpc, swap_depth=swap_depth)
    best = min(cands, key=lambda c: _selection_key(instance, c))
    report = check_invariants(best.solution)
    if not (report.lonely_ok and report.block_ok):
        raise InvariantViolation("; ".join(report.failures))
    return best.solution


def fap_style_bound_check(
    structured: PapInstance,
    exact_opt: int,
    *,
    eps: Fraction = Fraction(1, 1000),
    swap_depth: int = 2,
) -> bool:
    """Does the best capped-matching run meet the forest bound?

    Verifies ``cost <= (7/4 + eps) * opt + (opt - |paths|)`` for the
    cheapest b-run over all caps, the bound the capped matching alone is
    good for.
    """
    from .relax import build_2ecpc, shadow_complete

    ecpc = shadow_complete(build_2ecpc(structured))
    expensive = expensive_cross_pairs(structured, ecpc)
    best: Fraction | None = None
    for q in range(len(structured.paths) + 1):
        tracks = algorithm_b(ecpc, q, expensive=expensive, swap_depth=swap_depth)
        sol = WorkingSolution.build(structured, realize_tracks(ecpc, tracks))
        if best is None or sol.cost < best:
            best = sol.cost
    assert best is not None
    bound = (Fraction(7, 4) + eps) * exact_opt + (exact_opt - len(structured.paths))
    return best <= bound
