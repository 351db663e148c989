"""Seeded random instance generation.

Instances come out feasible (taking every link 2-edge-connects the graph) and
no link ever duplicates a path edge.  Feasibility is reached by repair: while
the all-links graph has a cut of size below two, a random link is added across
it.  Draws whose whole vertex budget is a single edge or two isolated points
are reshaped first, since only a doubled edge could ever close them.
"""

from __future__ import annotations

import itertools
import random

from .core import Link, PapInstance, link


def random_instance(
    rng: random.Random,
    max_paths: int = 12,
    max_vertices: int = 60,
    max_path_len: int = 6,
    link_factor: float = 1.0,
) -> PapInstance:
    """Draw a feasible instance with at most ``max_paths`` paths and
    ``max_vertices`` vertices."""
    k = rng.randint(1, max_paths)
    lengths: list[int] = []
    budget = max_vertices
    for i in range(k):
        still_needed = k - i - 1
        hi = min(max_path_len, budget - still_needed)
        ln = rng.randint(1, max(1, hi))
        lengths.append(ln)
        budget -= ln
    if lengths in ([2], [1, 1]):
        # A lone edge or two isolated vertices cannot be 2-edge-connected
        # without a doubled edge; grant a third vertex where the cap allows.
        lengths = [2, 1] if max_vertices >= 3 else [1]
    n = sum(lengths)

    order = list(range(n))
    rng.shuffle(order)
    it = iter(order)
    paths = [tuple(itertools.islice(it, ln)) for ln in lengths]

    forbidden: set[Link] = set()
    for p in paths:
        for u, v in itertools.pairwise(p):
            forbidden.add(link(u, v))

    links: set[Link] = set()
    want = int(link_factor * n)
    for _ in range(3 * want):
        if len(links) >= want or n < 2:
            break
        u, v = rng.sample(range(n), 2)
        cand = link(u, v)
        if cand not in forbidden and cand not in links:
            links.add(cand)

    return _repair(paths, links, rng)


def _repair(
    paths: list[tuple[int, ...]], links: set[Link], rng: random.Random
) -> PapInstance:
    path_edges = {link(u, v) for p in paths for u, v in itertools.pairwise(p)}
    while True:
        inst = PapInstance.make(paths, sorted(links))
        g = inst.union_graph()
        comps = g.components()
        if len(comps) > 1:
            a, b = comps[0], comps[1]
        else:
            cut = g.bridges()
            if not cut:
                return inst
            eid = min(cut)
            sides = g.components(skip=frozenset([eid]))
            u0 = g.ends(eid)[0]
            a = next(s for s in sides if u0 in s)
            b = next(s for s in sides if u0 not in s)
        fresh = [
            link(u, v) for u in sorted(a) for v in sorted(b) if link(u, v) not in links
        ]
        clean = [c for c in fresh if c not in path_edges]
        if not clean:
            raise ValueError("cut admits no fresh link; shape cannot be repaired")
        links.add(rng.choice(clean))
