"""General-graph matching subroutines.

Three operations on one engine: maximum-cardinality matching, minimum-cost
matching of exact size ``k`` (dummy-vertex reduction to a minimum-weight
perfect matching), and maximum matching with a budget on expensive edges
(binary costs plus a descending size guess).  The blossom machinery itself
comes from :mod:`networkx`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import networkx as nx

from .core import Link, link
from .oracle import Infeasible

Cost = int | Fraction


@dataclass(frozen=True)
class MatchingProblem:
    """A simple graph with optional edge costs and expensive-edge flags."""

    n: int
    edges: tuple[Link, ...]
    cost: Mapping[Link, Cost] = field(default_factory=dict)
    expensive: frozenset[Link] = frozenset()

    def __post_init__(self) -> None:
        seen = set()
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n) or u >= v:
                raise ValueError(f"bad edge ({u}, {v})")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
        for e, c in self.cost.items():
            if e not in seen:
                raise ValueError(f"cost for unknown edge {e}")
            if c < 0:
                raise ValueError(f"negative cost on {e}")
        if not self.expensive <= seen:
            raise ValueError("expensive flags on unknown edges")

    def cost_of(self, e: Link) -> Cost:
        return self.cost.get(e, 0)


def _normalize(mate: set[tuple[int, int]], keep: int) -> frozenset[Link]:
    return frozenset(link(u, v) for u, v in mate if u < keep and v < keep)


def max_matching(problem: MatchingProblem) -> frozenset[Link]:
    """A maximum-cardinality matching."""
    g = nx.Graph()
    g.add_nodes_from(range(problem.n))
    g.add_edges_from(problem.edges)
    mate = nx.max_weight_matching(g, maxcardinality=True, weight=None)
    return _normalize(mate, problem.n)


def min_cost_matching_exact_size(
    problem: MatchingProblem, k: int
) -> frozenset[Link]:
    """A minimum-cost matching with exactly ``k`` edges.

    Adds ``n - 2k`` dummy vertices joined to every original vertex at cost
    zero, and asks for a minimum-weight perfect matching of the padded graph;
    its original edges are exactly a cheapest size-``k`` matching.

    Raises :class:`Infeasible` when no matching of size ``k`` exists.
    """
    if k < 0:
        raise ValueError("matching size must be non-negative")
    if k == 0:
        return frozenset()
    if 2 * k > problem.n:
        raise Infeasible(f"not enough vertices for a matching of size {k}")
    g = nx.Graph()
    g.add_nodes_from(range(problem.n))
    for e in problem.edges:
        g.add_edge(*e, weight=problem.cost_of(e))
    for d in range(problem.n, 2 * problem.n - 2 * k):
        for v in range(problem.n):
            g.add_edge(d, v, weight=0)
    mate = nx.min_weight_matching(g)
    if 2 * len(mate) < g.number_of_nodes():
        raise Infeasible(f"no matching of size {k}")
    return _normalize(set(mate), problem.n)


def max_matching_bounded_expensive(
    problem: MatchingProblem, q: int
) -> frozenset[Link]:
    """A maximum-size matching using at most ``q`` expensive edges.

    Guesses the size from the unconstrained maximum downward; each guess asks
    for a cheapest exact-size matching under 0/1 costs (expensive edges cost
    one) and the first guess whose cost fits the budget wins.
    """
    if q < 0:
        raise ValueError("expensive-edge budget must be non-negative")
    flagged = MatchingProblem(
        n=problem.n,
        edges=problem.edges,
        cost={e: 1 for e in problem.expensive},
        expensive=problem.expensive,
    )
    for k in range(len(max_matching(problem)), 0, -1):
        try:
            m = min_cost_matching_exact_size(flagged, k)
        except Infeasible:
            continue
        if sum(1 for e in m if e in problem.expensive) <= q:
            return m
    return frozenset()
