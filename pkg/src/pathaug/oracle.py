"""Exact solvers, used as ground truth and inside the reduction's base cases.

All searches are deterministic: candidates are scanned in increasing link id
order and the returned optimum is the lexicographically smallest one (as an id
set).  Budgets make the searches safe to call on inputs that might be too big:
a cardinality cap turns the solver into a bounded prover (``opt > cap`` is a
real certificate, the search space below the cap was exhausted), while the
node limit aborts with the best known bounds attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import PapInstance


@dataclass
class SearchBudget:
    """Limits for the exact searches.

    ``max_links`` caps the solution cardinality that is searched; ``None``
    means the full link pool.  ``node_limit`` bounds search-tree nodes across
    all deepening levels.
    """

    max_links: int | None = None
    node_limit: int = 5_000_000


class BudgetExceeded(Exception):
    def __init__(
        self,
        message: str,
        incumbent: frozenset[int] | None = None,
        lower_bound: int = 0,
        nodes: int = 0,
    ) -> None:
        super().__init__(message)
        self.incumbent = incumbent
        self.lower_bound = lower_bound
        self.nodes = nodes


class Infeasible(ValueError):
    pass


# -- shared cut analysis ----------------------------------------------------


class _CutState:
    """Components, 2EC classes and the augmentation lower bound of a partial pick."""

    __slots__ = ("feasible", "lb_extra", "class_of", "cut_side", "n_components")

    def __init__(self, inst: PapInstance, chosen: Iterable[int]) -> None:
        n = inst.n
        adj: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
        eid = 0
        for _, u, v in inst.path_edges():
            adj[u].append((eid, v, -1))
            adj[v].append((eid, u, -1))
            eid += 1
        for lid in sorted(chosen):
            u, v = inst.links[lid]
            adj[u].append((eid, v, lid))
            adj[v].append((eid, u, lid))
            eid += 1

        comp_of = [-1] * n
        disc = [-1] * n
        low = [0] * n
        bridge_eids: list[int] = []
        timer = 0
        n_comp = 0
        for root in range(n):
            if comp_of[root] != -1:
                continue
            ci = n_comp
            n_comp += 1
            comp_of[root] = ci
            disc[root] = low[root] = timer
            timer += 1
            stack = [(root, -1, iter(adj[root]))]
            while stack:
                v, in_eid, edges = stack[-1]
                pushed = False
                for e, w, _ in edges:
                    if e == in_eid or w == v:
                        continue
                    if disc[w] == -1:
                        comp_of[w] = ci
                        disc[w] = low[w] = timer
                        timer += 1
                        stack.append((w, e, iter(adj[w])))
                        pushed = True
                        break
                    low[v] = min(low[v], disc[w])
                if pushed:
                    continue
                stack.pop()
                if in_eid >= 0:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[v])
                    if low[v] > disc[parent]:
                        bridge_eids.append(in_eid)

        bridge_set = frozenset(bridge_eids)
        class_of = [-1] * n
        n_class = 0
        for root in range(n):
            if class_of[root] != -1:
                continue
            class_of[root] = n_class
            queue = [root]
            while queue:
                v = queue.pop()
                for e, w, _ in adj[v]:
                    if e in bridge_set or class_of[w] != -1:
                        continue
                    class_of[w] = n_class
                    queue.append(w)
            n_class += 1

        self.class_of = class_of
        self.n_components = n_comp
        self.feasible = n_comp == 1 and not bridge_set

        # Bridge forest: count degree-1 classes per component; a component
        # that is a single class still needs two boundary links when it is
        # not alone.  The classic augmentation bound is ceil(leaves / 2).
        class_comp = [-1] * n_class
        class_deg = [0] * n_class
        for v in range(n):
            class_comp[class_of[v]] = comp_of[v]
        bridge_class_pairs: list[tuple[int, int, int]] = []
        for v in range(n):
            for e, w, _ in adj[v]:
                if e in bridge_set and v < w:
                    class_deg[class_of[v]] += 1
                    class_deg[class_of[w]] += 1
                    bridge_class_pairs.append((e, class_of[v], class_of[w]))
        leafish = 0
        if n_comp > 1 or bridge_set:
            comp_classes = [0] * n_comp
            for c in range(n_class):
                comp_classes[class_comp[c]] += 1
            for c in range(n_class):
                if class_deg[c] == 1:
                    leafish += 1
                elif class_deg[c] == 0 and comp_classes[class_comp[c]] == 1:
                    leafish += 2
        self.lb_extra = math.ceil(leafish / 2)

        # One violated cut, as a vertex side; completions must cross it.
        self.cut_side: frozenset[int] | None = None
        if n_comp > 1:
            self.cut_side = frozenset(v for v in range(n) if comp_of[v] == 0)
        elif bridge_set:
            pick = min(bridge_set)
            _, ca, cb = next(p for p in bridge_class_pairs if p[0] == pick)
            forest: dict[int, list[tuple[int, int]]] = {}
            for e, x, y in bridge_class_pairs:
                forest.setdefault(x, []).append((e, y))
                forest.setdefault(y, []).append((e, x))
            side = {ca}
            queue = [ca]
            while queue:
                c = queue.pop()
                for e, d in forest.get(c, ()):
                    if e == pick or d in side:
                        continue
                    side.add(d)
                    queue.append(d)
            self.cut_side = frozenset(v for v in range(n) if class_of[v] in side)


class _PapSearch:
    def __init__(self, inst: PapInstance, budget: SearchBudget) -> None:
        self.inst = inst
        self.budget = budget
        self.nodes = 0
        self.completed_level = -1

    def _tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.budget.node_limit:
            raise BudgetExceeded(
                "node limit hit in exact search",
                incumbent=greedy_solution(self.inst),
                lower_bound=self.completed_level + 1,
                nodes=self.nodes,
            )

    def run(self, cap: int) -> frozenset[int] | None:
        state = _CutState(self.inst, ())
        if state.feasible:
            self.completed_level = 0
            return frozenset()
        for k in range(max(1, state.lb_extra), cap + 1):
            found = self._dfs(0, [], k)
            if found is not None:
                return found
            self.completed_level = k
        return None

    def _dfs(self, start: int, chosen: list[int], k: int) -> frozenset[int] | None:
        self._tick()
        state = _CutState(self.inst, chosen)
        if state.feasible:
            return frozenset(chosen)
        if len(chosen) >= k or state.lb_extra > k - len(chosen):
            return None
        links = self.inst.links
        cut = state.cut_side
        assert cut is not None
        last_crossing = -1
        for j in range(len(links) - 1, start - 1, -1):
            u, v = links[j]
            if (u in cut) != (v in cut):
                last_crossing = j
                break
        if last_crossing < start:
            return None
        cls = state.class_of
        for j in range(start, last_crossing + 1):
            u, v = links[j]
            if cls[u] == cls[v]:
                continue  # joins an already 2EC pair: never in a minimum pick
            chosen.append(j)
            found = self._dfs(j + 1, chosen, k)
            chosen.pop()
            if found is not None:
                return found
        return None


def greedy_solution(inst: PapInstance) -> frozenset[int] | None:
    """A feasible pick by always crossing the first violated cut with the
    lowest-id link; ``None`` if the instance is infeasible."""
    chosen: list[int] = []
    rest = set(range(len(inst.links)))
    while True:
        state = _CutState(inst, chosen)
        if state.feasible:
            return frozenset(chosen)
        cut = state.cut_side
        assert cut is not None
        pick = next(
            (j for j in sorted(rest) if (inst.links[j][0] in cut) != (inst.links[j][1] in cut)),
            None,
        )
        if pick is None:
            return None
        chosen.append(pick)
        rest.remove(pick)


def exact_pap(
    inst: PapInstance, budget: SearchBudget | None = None
) -> frozenset[int]:
    """Minimum solution as the lexicographically smallest optimal id set.

    Raises :class:`Infeasible` when even the full link pool does not
    2-edge-connect the instance, and :class:`BudgetExceeded` when a limit
    stops the search before optimality is proven.
    """
    budget = budget or SearchBudget()
    upper = greedy_solution(inst)
    if upper is None:
        raise Infeasible("taking every link still leaves a cut below size 2")
    cap = len(upper)
    if budget.max_links is not None and budget.max_links < cap:
        cap = budget.max_links
    search = _PapSearch(inst, budget)
    found = search.run(cap)
    if found is not None:
        return found
    if budget.max_links is not None and len(upper) > budget.max_links:
        raise BudgetExceeded(
            f"optimum exceeds cardinality cap {budget.max_links}",
            incumbent=upper,
            lower_bound=search.completed_level + 1,
            nodes=search.nodes,
        )
    return upper  # greedy was already optimal and lexicographic search confirmed it


def pap_opt_within(
    inst: PapInstance, cap: int, node_limit: int = 5_000_000
) -> int | None:
    """The optimum value if it is at most ``cap``, else ``None`` (a real
    certificate: all smaller picks were enumerated).  Raises
    :class:`BudgetExceeded` only on the node limit."""
    try:
        sol = exact_pap(inst, SearchBudget(max_links=cap, node_limit=node_limit))
    except BudgetExceeded as stop:
        if stop.lower_bound > cap:
            return None
        raise
    except Infeasible:
        return None
    return len(sol) if len(sol) <= cap else None


# -- exact minimum link cover (degree-one endpoints, two per path) ----------


def exact_2ecpc(ecpc, budget: SearchBudget | None = None) -> frozenset[int]:
    """Minimum link set with every path endpoint covered and every path having
    outgoing degree at least two (the 2-edge-cover relaxation's exact optimum).
    ``ecpc`` is a relaxation instance; see :mod:`pathaug.relax`.
    Lexicographically smallest optimum."""
    budget = budget or SearchBudget()
    m = len(ecpc.links)
    path_of = ecpc.path_of
    endpoints = ecpc.endpoint_vertices

    def deficits(chosen: list[int]) -> tuple[list[int], set[int]]:
        out_deg = [0] * len(ecpc.paths)
        covered: set[int] = set()
        for lid in chosen:
            u, v = ecpc.links[lid]
            covered.add(u)
            covered.add(v)
            if path_of[u] != path_of[v]:
                out_deg[path_of[u]] += 1
                out_deg[path_of[v]] += 1
        need = [max(0, 2 - d) for d in out_deg]
        uncovered = {u for u in endpoints if u not in covered}
        return need, uncovered

    def lower(need: list[int], uncovered: set[int]) -> int:
        return max(
            math.ceil(sum(need) / 2),
            math.ceil(len(uncovered) / 2),
        )

    nodes = 0

    def dfs(start: int, chosen: list[int], k: int) -> frozenset[int] | None:
        nonlocal nodes
        nodes += 1
        if nodes > budget.node_limit:
            raise BudgetExceeded("node limit hit in cover search", nodes=nodes)
        need, uncovered = deficits(chosen)
        if not uncovered and not any(need):
            return frozenset(chosen)
        if len(chosen) >= k or lower(need, uncovered) > k - len(chosen):
            return None
        # completions must service the first unmet requirement
        if any(need):
            target_path = need.index(next(x for x in need if x))
            def helps(j: int) -> bool:
                u, v = ecpc.links[j]
                return (path_of[u] == target_path) != (path_of[v] == target_path)
        else:
            target_vertex = min(uncovered)
            def helps(j: int) -> bool:
                return target_vertex in ecpc.links[j]
        last = -1
        for j in range(m - 1, start - 1, -1):
            if helps(j):
                last = j
                break
        if last < start:
            return None
        for j in range(start, last + 1):
            u, v = ecpc.links[j]
            useful = (
                u in uncovered
                or v in uncovered
                or (path_of[u] != path_of[v] and (need[path_of[u]] or need[path_of[v]]))
            )
            if not useful:
                continue
            chosen.append(j)
            found = dfs(j + 1, chosen, k)
            chosen.pop()
            if found is not None:
                return found
        return None

    need0, uncovered0 = deficits([])
    hi = m if budget.max_links is None else min(m, budget.max_links)
    for k in range(lower(need0, uncovered0), hi + 1):
        found = dfs(0, [], k)
        if found is not None:
            return found
    raise Infeasible("no link cover exists under the given limits")


# -- exact set packing ------------------------------------------------------


def exact_set_packing(
    sets: Sequence[frozenset[int]], budget: SearchBudget | None = None
) -> tuple[int, ...]:
    """Indices of a maximum collection of pairwise disjoint sets.

    Deterministic branch and bound over the first (lowest) element still in
    play; among maximum packings the first found in that order is returned.
    """
    budget = budget or SearchBudget()
    universe = sorted(set().union(*sets)) if sets else []
    by_element: dict[int, list[int]] = {e: [] for e in universe}
    for si, s in enumerate(sets):
        for e in s:
            by_element[e].append(si)

    min_size = min((len(s) for s in sets), default=1) or 1

    best: list[int] = []
    nodes = 0

    def dfs(eidx: int, taken: list[int], used: set[int]) -> None:
        nonlocal best, nodes
        nodes += 1
        if nodes > budget.node_limit:
            raise BudgetExceeded("node limit hit in packing search", nodes=nodes)
        while eidx < len(universe) and universe[eidx] in used:
            eidx += 1
        if len(taken) + (len(universe) - eidx) // min_size <= len(best):
            return
        if eidx == len(universe):
            best = list(taken)  # strictly better, by the bound above
            return
        e = universe[eidx]
        for si in by_element[e]:
            s = sets[si]
            if s & used:
                continue
            taken.append(si)
            used.update(s)
            dfs(eidx + 1, taken, used)
            used.difference_update(s)
            taken.pop()
        dfs(eidx + 1, taken, used)  # leave e unpacked

    dfs(0, [], set())
    return tuple(best)


def exact_tpp(
    ecpc,
    max_track_links: int | None = None,
    budget: SearchBudget | None = None,
) -> tuple["Track", ...]:
    """A maximum vertex-disjoint track packing, by exhaustive track
    enumeration (up to ``max_track_links`` links per track, default enough for
    any track of the instance) plus exact set packing."""
    from .relax import enumerate_tracks

    if max_track_links is None:
        max_track_links = 2 * len(ecpc.paths) + 1
    tracks = enumerate_tracks(ecpc, max_track_links)
    element_sets = [t.endpoint_set() for t in tracks]
    picked = exact_set_packing(element_sets, budget)
    return tuple(tracks[i] for i in picked)
