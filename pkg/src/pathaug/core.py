"""Instances of the path augmentation problem and the structure of their solutions.

An instance consists of vertex-disjoint paths covering every vertex, plus a
pool of candidate links (extra edges).  A solution is a sub(multi)set of links
whose union with the path edges is a 2-edge-connected spanning multigraph.

Links are stored as a sorted tuple of normalized ``(u, v)`` pairs in which
duplicates are allowed, and are addressed by integer id (their index).
Parallel links cannot occur in hand-written instances but arise naturally when
an instance is derived from another by contraction, and they genuinely matter
there: two parallel copies of a pair are two distinct edges for
2-edge-connectivity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Iterator, Sequence

Link = tuple[int, int]

#: Union-graph edge tags: ("p", path_id) for path edges, ("l", link_id) for links.
EdgeTag = tuple[str, int]


def link(u: int, v: int) -> Link:
    """Normalize a link to ``u < v`` order, rejecting self-loops."""
    if u == v:
        raise ValueError(f"self-loop link at vertex {u}")
    return (u, v) if u < v else (v, u)


class Multigraph:
    """Undirected multigraph with integer vertices and tagged, id-addressed edges."""

    __slots__ = ("n", "_ends", "_tags", "_adj")

    def __init__(self, n: int) -> None:
        self.n = n
        self._ends: list[tuple[int, int]] = []
        self._tags: list[object] = []
        self._adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]

    def add_edge(self, u: int, v: int, tag: object = None) -> int:
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
        eid = len(self._ends)
        self._ends.append((u, v))
        self._tags.append(tag)
        self._adj[u].append((eid, v))
        if v != u:
            self._adj[v].append((eid, u))
        return eid

    @property
    def m(self) -> int:
        return len(self._ends)

    def ends(self, eid: int) -> tuple[int, int]:
        return self._ends[eid]

    def tag(self, eid: int) -> object:
        return self._tags[eid]

    def degree(self, v: int) -> int:
        return len(self._adj[v]) + sum(1 for _, w in self._adj[v] if w == v)

    def incident(self, v: int) -> list[tuple[int, int]]:
        """Edges at ``v`` as ``(edge id, other endpoint)`` pairs."""
        return self._adj[v]

    def components(self, skip: frozenset[int] = frozenset()) -> list[frozenset[int]]:
        """Connected components (vertex sets), ignoring edges in ``skip``."""
        seen = [False] * self.n
        out: list[frozenset[int]] = []
        for start in range(self.n):
            if seen[start]:
                continue
            seen[start] = True
            comp = [start]
            queue = [start]
            while queue:
                v = queue.pop()
                for eid, w in self._adj[v]:
                    if eid in skip or seen[w]:
                        continue
                    seen[w] = True
                    comp.append(w)
                    queue.append(w)
            out.append(frozenset(comp))
        return out

    def bridges(self) -> frozenset[int]:
        """Edge ids of all bridges, via one DFS with lowpoints.

        Parallel edges are respected: only the tree edge's own id is skipped
        when computing lowpoints, so a parallel copy acts as a back edge and
        neither copy is reported.  Self-loops are never bridges.
        """
        disc = [-1] * self.n
        low = [0] * self.n
        result: list[int] = []
        timer = 0
        for root in range(self.n):
            if disc[root] != -1:
                continue
            disc[root] = low[root] = timer
            timer += 1
            stack: list[tuple[int, int, Iterator[tuple[int, int]]]] = [
                (root, -1, iter(self._adj[root]))
            ]
            while stack:
                v, in_eid, edges = stack[-1]
                pushed = False
                for eid, w in edges:
                    if eid == in_eid or w == v:
                        continue
                    if disc[w] == -1:
                        disc[w] = low[w] = timer
                        timer += 1
                        stack.append((w, eid, iter(self._adj[w])))
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
                        result.append(in_eid)
        return frozenset(result)

    def is_two_edge_connected(self) -> bool:
        if self.n <= 1:
            return True
        if len(self.components()) != 1:
            return False
        return not self.bridges()

    def contract(
        self, parts: Sequence[Iterable[int]]
    ) -> tuple["Multigraph", list[int], dict[int, int]]:
        """Contract each part to a single vertex.

        Returns ``(graph, vertex_map, edge_map)`` where ``vertex_map[v]`` is
        the image of old vertex ``v`` and ``edge_map`` sends new edge ids to
        old ones.  Self-loops produced by the contraction are dropped;
        parallel edges are kept.  New vertex ids are assigned by scanning old
        ids in order, so a part is numbered at its smallest member.
        """
        part_of = [-1] * self.n
        for pi, part in enumerate(parts):
            for v in part:
                if part_of[v] != -1:
                    raise ValueError(f"vertex {v} in two parts")
                part_of[v] = pi
        vertex_map = [-1] * self.n
        part_image = [-1] * len(parts)
        fresh = 0
        for v in range(self.n):
            pi = part_of[v]
            if pi == -1:
                vertex_map[v] = fresh
                fresh += 1
            elif part_image[pi] == -1:
                part_image[pi] = fresh
                vertex_map[v] = fresh
                fresh += 1
            else:
                vertex_map[v] = part_image[pi]
        out = Multigraph(fresh)
        edge_map: dict[int, int] = {}
        for eid, (u, v) in enumerate(self._ends):
            nu, nv = vertex_map[u], vertex_map[v]
            if nu == nv:
                continue
            new = out.add_edge(nu, nv, self._tags[eid])
            edge_map[new] = eid
        return out, vertex_map, edge_map


def bridges(graph: Multigraph) -> frozenset[int]:
    """All bridge edge ids of ``graph``."""
    return graph.bridges()


def contract(
    graph: Multigraph, parts: Sequence[Iterable[int]]
) -> tuple[Multigraph, list[int], dict[int, int]]:
    """Contract vertex ``parts`` of ``graph``; see :meth:`Multigraph.contract`."""
    return graph.contract(parts)


@dataclass(frozen=True)
class PapInstance:
    """A path augmentation instance.  Build with :meth:`make` or :func:`from_text`."""

    n: int
    paths: tuple[tuple[int, ...], ...]
    links: tuple[Link, ...]

    @classmethod
    def make(
        cls,
        paths: Iterable[Iterable[int]],
        links: Iterable[Link | tuple[int, int]],
    ) -> "PapInstance":
        path_tuple = tuple(tuple(p) for p in paths)
        seen: set[int] = set()
        for p in path_tuple:
            if not p:
                raise ValueError("empty path")
            for v in p:
                if v in seen:
                    raise ValueError(f"vertex {v} appears twice")
                seen.add(v)
        n = len(seen)
        if seen != set(range(n)):
            raise ValueError("path vertices must be exactly 0..n-1")
        normalized = sorted(link(u, v) for u, v in links)
        for u, v in normalized:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"link ({u}, {v}) out of range")
        return cls(n, path_tuple, tuple(normalized))

    # -- vertex / path structure -------------------------------------------

    @cached_property
    def path_of(self) -> tuple[int, ...]:
        out = [-1] * self.n
        for i, p in enumerate(self.paths):
            for v in p:
                out[v] = i
        return tuple(out)

    @cached_property
    def endpoint_vertices(self) -> frozenset[int]:
        """Vertices of degree at most 1 with respect to path edges."""
        ends: set[int] = set()
        for p in self.paths:
            ends.add(p[0])
            ends.add(p[-1])
        return frozenset(ends)

    def path_ends(self, i: int) -> tuple[int, int]:
        p = self.paths[i]
        return p[0], p[-1]

    def is_endpoint(self, v: int) -> bool:
        return v in self.endpoint_vertices

    def path_edges(self) -> Iterator[tuple[int, int, int]]:
        """Yield ``(path_id, u, v)`` for every path edge."""
        for i, p in enumerate(self.paths):
            for u, v in itertools.pairwise(p):
                yield i, u, v

    def on_same_path(self, u: int, v: int) -> bool:
        return self.path_of[u] == self.path_of[v]

    def subpath(self, u: int, v: int) -> tuple[int, ...]:
        """Vertices of the unique path segment between ``u`` and ``v`` (same path)."""
        p = self.paths[self.path_of[u]]
        if self.path_of[u] != self.path_of[v]:
            raise ValueError(f"{u} and {v} lie on different paths")
        i, j = p.index(u), p.index(v)
        return p[i : j + 1] if i <= j else tuple(reversed(p[j : i + 1]))

    # -- links -------------------------------------------------------------

    def pair(self, lid: int) -> Link:
        return self.links[lid]

    @cached_property
    def ids_by_pair(self) -> dict[Link, tuple[int, ...]]:
        out: dict[Link, list[int]] = {}
        for lid, pr in enumerate(self.links):
            out.setdefault(pr, []).append(lid)
        return {pr: tuple(ids) for pr, ids in out.items()}

    def to_ids(self, sol: Iterable[int | Link]) -> frozenset[int]:
        """Normalize a solution given as link ids and/or pairs to a set of ids.

        A pair occurring k times claims the k lowest ids of that pair not
        otherwise used.  Raises ``LookupError`` for links not in the instance.
        """
        taken: set[int] = set()
        pairs: list[Link] = []
        for item in sol:
            if isinstance(item, int):
                if not 0 <= item < len(self.links):
                    raise LookupError(f"no link with id {item}")
                if item in taken:
                    raise LookupError(f"link id {item} given twice")
                taken.add(item)
            else:
                pairs.append(link(*item))
        for pr in pairs:
            for lid in self.ids_by_pair.get(pr, ()):
                if lid not in taken:
                    taken.add(lid)
                    break
            else:
                raise LookupError(f"link {pr} not available in instance")
        return frozenset(taken)

    def sorted_pairs(self, ids: Iterable[int]) -> tuple[Link, ...]:
        return tuple(sorted(self.links[i] for i in ids))

    @cached_property
    def link_adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per vertex, the incident links as ``(link_id, other_end)`` pairs."""
        out: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for lid, (u, v) in enumerate(self.links):
            out[u].append((lid, v))
            out[v].append((lid, u))
        return tuple(tuple(a) for a in out)

    def link_neighbors(self, v: int) -> frozenset[int]:
        return frozenset(w for _, w in self.link_adjacency[v])

    def neighbors(self, v: int) -> frozenset[int]:
        """Neighbors in the union graph of path edges and all links."""
        p = self.paths[self.path_of[v]]
        i = p.index(v)
        near = {w for _, w in self.link_adjacency[v]}
        if i > 0:
            near.add(p[i - 1])
        if i + 1 < len(p):
            near.add(p[i + 1])
        return frozenset(near)

    # -- graphs ------------------------------------------------------------

    def union_graph(self, sol: Iterable[int] | None = None) -> Multigraph:
        """Multigraph of all path edges plus the given links (default: all)."""
        g = Multigraph(self.n)
        for i, u, v in self.path_edges():
            g.add_edge(u, v, ("p", i))
        ids = range(len(self.links)) if sol is None else sorted(sol)
        for lid in ids:
            u, v = self.links[lid]
            g.add_edge(u, v, ("l", lid))
        return g

    def feasible(self) -> bool:
        """True if taking every link 2-edge-connects the instance."""
        return self.union_graph().is_two_edge_connected()

    # -- text format -------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"pap {self.n}"]
        for p in self.paths:
            lines.append("path " + " ".join(map(str, p)))
        for u, v in self.links:
            lines.append(f"link {u} {v}")
        return "\n".join(lines) + "\n"


def from_text(text: str) -> PapInstance:
    """Parse the plain-text instance format (inverse of :meth:`PapInstance.to_text`)."""
    n: int | None = None
    paths: list[tuple[int, ...]] = []
    links: list[Link] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind, args = fields[0], fields[1:]
        try:
            values = [int(a) for a in args]
        except ValueError as exc:
            raise ValueError(f"line {lineno}: non-integer field") from exc
        if kind == "pap":
            if n is not None or len(values) != 1:
                raise ValueError(f"line {lineno}: misplaced 'pap' header")
            n = values[0]
        elif kind == "path":
            if not values:
                raise ValueError(f"line {lineno}: empty path")
            paths.append(tuple(values))
        elif kind == "link":
            if len(values) != 2:
                raise ValueError(f"line {lineno}: 'link' takes two vertices")
            links.append(link(*values))
        else:
            raise ValueError(f"line {lineno}: unknown directive {kind!r}")
    if n is None:
        raise ValueError("missing 'pap <n>' header")
    inst = PapInstance.make(paths, links)
    if inst.n != n:
        raise ValueError(f"header says {n} vertices, paths cover {inst.n}")
    return inst


# -- solutions and their block structure -----------------------------------


def solution_graph(instance: PapInstance, sol: Iterable[int | Link]) -> Multigraph:
    return instance.union_graph(instance.to_ids(sol))


def verify_solution(instance: PapInstance, sol: Iterable[int | Link]) -> bool:
    """True if path edges plus ``sol`` form a 2-edge-connected spanning multigraph.

    Raises ``LookupError`` if ``sol`` uses a link (or a multiplicity) the
    instance does not have.
    """
    return solution_graph(instance, sol).is_two_edge_connected()


class BlockKind(Enum):
    SIMPLE = "simple"  # vertices within a single path
    SMALL = "small"  # vertices exactly the union of two whole paths
    LARGE = "large"  # contains at least three whole paths
    OTHER = "other"


class ComponentKind(Enum):
    SMALL = "small"  # 2-edge-connected, exactly two links
    LARGE = "large"  # 2-edge-connected, three or more links
    OTHER = "other"  # 2-edge-connected, at most one link (not produced by the pipeline)


@dataclass(frozen=True)
class Block:
    """Maximal 2-edge-connected subgraph on at least two vertices."""

    vertices: frozenset[int]
    link_ids: frozenset[int]
    kind: BlockKind


@dataclass(frozen=True)
class Component:
    vertices: frozenset[int]
    path_ids: frozenset[int]
    link_ids: frozenset[int]
    bridge_eids: frozenset[int]
    block_ids: tuple[int, ...]
    leaves: tuple[int, ...]
    is_complex: bool
    is_trivial: bool
    kind: ComponentKind | None  # set iff the component is 2-edge-connected

    @property
    def is_two_ec(self) -> bool:
        return not self.is_complex


@dataclass(frozen=True)
class ComponentTree:
    """A complex component with its blocks contracted: a tree of supernodes.

    Nodes are ``("b", block_id)`` or ``("v", vertex)`` for vertices in no
    block; edges are the component's bridges, keyed by union-graph edge id.
    """

    nodes: tuple[tuple[str, int], ...]
    edges: tuple[tuple[tuple[str, int], tuple[str, int], int], ...]

    @cached_property
    def adjacency(self) -> dict[tuple[str, int], tuple[tuple[tuple[str, int], int], ...]]:
        adj: dict[tuple[str, int], list[tuple[tuple[str, int], int]]] = {
            node: [] for node in self.nodes
        }
        for a, b, eid in self.edges:
            adj[a].append((b, eid))
            adj[b].append((a, eid))
        return {node: tuple(out) for node, out in adj.items()}

    def degree(self, node: tuple[str, int]) -> int:
        return len(self.adjacency[node])

    def tree_path(
        self, a: tuple[str, int], b: tuple[str, int]
    ) -> tuple[tuple[str, int], ...]:
        """The unique path of supernodes from ``a`` to ``b``."""
        prev: dict[tuple[str, int], tuple[str, int] | None] = {a: None}
        queue = [a]
        while queue:
            node = queue.pop(0)
            if node == b:
                break
            for other, _ in self.adjacency[node]:
                if other not in prev:
                    prev[other] = node
                    queue.append(other)
        if b not in prev:
            raise ValueError("nodes lie in different components")
        out = [b]
        while prev[out[-1]] is not None:
            out.append(prev[out[-1]])  # type: ignore[arg-type]
        return tuple(reversed(out))


class BlockDecomposition:
    """Components, blocks, bridges and vertex roles of a solution graph."""

    def __init__(self, instance: PapInstance, sol: Iterable[int | Link]) -> None:
        self.instance = instance
        self.sol = instance.to_ids(sol)
        g = instance.union_graph(self.sol)
        self.graph = g
        self.bridge_eids = g.bridges()
        self.bridge_link_ids = frozenset(
            g.tag(eid)[1] for eid in self.bridge_eids if g.tag(eid)[0] == "l"
        )

        comp_sets = sorted(g.components(), key=min)
        self.component_of: list[int] = [-1] * instance.n
        for ci, comp in enumerate(comp_sets):
            for v in comp:
                self.component_of[v] = ci

        classes = sorted(g.components(skip=self.bridge_eids), key=min)
        self.block_of: list[int | None] = [None] * instance.n
        blocks: list[Block] = []
        for cls in classes:
            if len(cls) < 2:
                continue
            bid = len(blocks)
            for v in cls:
                self.block_of[v] = bid
            inside = frozenset(
                lid for lid in self.sol if instance.links[lid][0] in cls and instance.links[lid][1] in cls
            )
            blocks.append(Block(cls, inside, self._block_kind(cls)))
        self.blocks = tuple(blocks)
        self.lonely = frozenset(v for v in range(instance.n) if self.block_of[v] is None)

        comps: list[Component] = []
        for comp in comp_sets:
            link_ids = frozenset(
                lid
                for lid in self.sol
                if instance.links[lid][0] in comp and instance.links[lid][1] in comp
            )
            b_eids = frozenset(e for e in self.bridge_eids if g.ends(e)[0] in comp)
            block_ids = tuple(
                sorted({self.block_of[v] for v in comp if self.block_of[v] is not None})
            )
            leaves = tuple(sorted(v for v in comp if g.degree(v) == 1))
            path_ids = frozenset(instance.path_of[v] for v in comp)
            is_complex = bool(b_eids)
            is_trivial = (
                not link_ids
                and len(path_ids) == 1
                and comp == frozenset(instance.paths[next(iter(path_ids))])
            )
            kind: ComponentKind | None = None
            if not is_complex:
                if len(link_ids) >= 3:
                    kind = ComponentKind.LARGE
                elif len(link_ids) == 2:
                    kind = ComponentKind.SMALL
                else:
                    kind = ComponentKind.OTHER
            comps.append(
                Component(
                    comp, path_ids, link_ids, b_eids, block_ids, leaves,
                    is_complex, is_trivial, kind,
                )
            )
        self.components = tuple(comps)

    def _block_kind(self, vertices: frozenset[int]) -> BlockKind:
        inst = self.instance
        touched = {inst.path_of[v] for v in vertices}
        if len(touched) == 1:
            return BlockKind.SIMPLE
        whole = [i for i in touched if vertices.issuperset(inst.paths[i])]
        if len(whole) >= 3:
            return BlockKind.LARGE
        if len(touched) == 2 and len(whole) == 2 and vertices == frozenset(
            itertools.chain(*(inst.paths[i] for i in whole))
        ):
            return BlockKind.SMALL
        return BlockKind.OTHER

    def component_tree(self, ci: int) -> ComponentTree:
        comp = self.components[ci]

        def image(v: int) -> tuple[str, int]:
            b = self.block_of[v]
            return ("v", v) if b is None else ("b", b)

        nodes = sorted({image(v) for v in comp.vertices})
        edges = []
        for eid in sorted(comp.bridge_eids):
            u, v = self.graph.ends(eid)
            edges.append((image(u), image(v), eid))
        return ComponentTree(tuple(nodes), tuple(edges))

    def simple_block_vertices(self, ci: int) -> frozenset[int]:
        simple = {
            b for b in self.components[ci].block_ids
            if self.blocks[b].kind is BlockKind.SIMPLE
        }
        return frozenset(
            v for v in self.components[ci].vertices if self.block_of[v] in simple
        )


def block_decompose(instance: PapInstance, sol: Iterable[int | Link]) -> BlockDecomposition:
    return BlockDecomposition(instance, sol)


# -- link classes ----------------------------------------------------------


@dataclass(frozen=True)
class LinkClasses:
    """Ids of links grouped by how they meet path endpoints."""

    endpoint_vertices: frozenset[int]
    endpoint_links: frozenset[int]  # both ends are path endpoints
    closing_links: frozenset[int]  # endpoint links joining the two ends of one path
    cross_links: frozenset[int]  # endpoint links joining two different paths


def link_classes(instance: PapInstance) -> LinkClasses:
    ends = instance.endpoint_vertices
    star: set[int] = set()
    closing: set[int] = set()
    cross: set[int] = set()
    for lid, (u, v) in enumerate(instance.links):
        if u in ends and v in ends:
            star.add(lid)
            if instance.on_same_path(u, v):
                closing.add(lid)
            else:
                cross.add(lid)
    return LinkClasses(ends, frozenset(star), frozenset(closing), frozenset(cross))


# -- degenerate paths ------------------------------------------------------


def degenerate_paths(instance: PapInstance) -> dict[int, int]:
    """Paths whose link neighborhood collapses onto one partner path.

    Path ``P'`` with endpoints ``u', v'`` qualifies with witness ``P``
    (endpoints ``u, v``) when ``u'u``, ``v'v`` and ``u'v'`` are all links and
    every neighbor of ``u'`` and of ``v'`` lies within the two paths.  The
    witness is unique; returns ``{path_id: witness_path_id}``.
    """
    out: dict[int, int] = {}
    for i, p in enumerate(instance.paths):
        up, vp = p[0], p[-1]
        if up == vp or link(up, vp) not in instance.ids_by_pair:
            continue
        near = instance.neighbors(up) | instance.neighbors(vp)
        partners = {instance.path_of[w] for w in near} - {i}
        for j in sorted(partners):
            u, v = instance.path_ends(j)
            straight = (
                link(up, u) in instance.ids_by_pair
                and link(vp, v) in instance.ids_by_pair
            )
            flipped = (
                u != v
                and link(up, v) in instance.ids_by_pair
                and link(vp, u) in instance.ids_by_pair
            )
            if not (straight or flipped):
                continue
            scope = set(p) | set(instance.paths[j])
            if near <= scope:
                out[i] = j
                break
    return out


# -- deriving instances by removal and contraction -------------------------


@dataclass(frozen=True)
class DerivedInstance:
    """An instance obtained from a parent by dropping and merging vertices.

    ``vertex_map[v]`` is the derived vertex for parent vertex ``v`` (or -1 if
    dropped); ``link_map`` sends each derived link id to the parent link id it
    came from (distinct derived ids always come from distinct parent ids).
    """

    instance: PapInstance
    vertex_map: tuple[int, ...]
    link_map: tuple[int, ...]

    def lift_links(self, sol: Iterable[int]) -> frozenset[int]:
        """Map a derived solution back to parent link ids.

        Used copies of each contracted pair are spread over distinct parent
        links (lowest parent ids first), so parallel multiplicity survives.
        """
        return frozenset(self.link_map[lid] for lid in sol)


def derive_instance(
    parent: PapInstance,
    keep: Iterable[int] | None = None,
    merge: Sequence[Iterable[int]] = (),
) -> DerivedInstance | None:
    """Restrict ``parent`` to ``keep`` and contract each part of ``merge``.

    Returns ``None`` when the surviving path edges do not form vertex-disjoint
    simple paths (a merged vertex would need path degree above two, or a path
    would close into a cycle); such a derivation is simply not an instance.
    """
    kept = set(range(parent.n)) if keep is None else set(keep)
    merge = [tuple(part) for part in merge]
    class_of: dict[int, int] = {}
    for pi, part in enumerate(merge):
        for v in part:
            if v not in kept:
                raise ValueError(f"merged vertex {v} is not kept")
            if v in class_of:
                raise ValueError(f"vertex {v} in two merge parts")
            class_of[v] = pi

    # Name each derived vertex class by its smallest parent member.
    part_rep = [min(part) for part in merge]

    def cls(v: int) -> int:
        return part_rep[class_of[v]] if v in class_of else v

    # Path edges between derived classes; reject anything but disjoint paths.
    adj: dict[int, list[int]] = {cls(v): [] for v in kept}
    for _, u, v in parent.path_edges():
        if u not in kept or v not in kept:
            continue
        cu, cv = cls(u), cls(v)
        if cu == cv:
            continue
        adj[cu].append(cv)
        adj[cv].append(cu)
    if any(len(near) > 2 for near in adj.values()):
        return None

    paths: list[tuple[int, ...]] = []
    visited: set[int] = set()
    for start in sorted(adj):
        if start in visited or len(adj[start]) > 1:
            continue
        run = [start]
        visited.add(start)
        while True:
            nxt = [w for w in adj[run[-1]] if w not in visited]
            if not nxt:
                break
            run.append(nxt[0])
            visited.add(nxt[0])
        paths.append(tuple(run))
    if len(visited) != len(adj):
        return None  # leftover vertices sit on path cycles

    order = sorted(paths, key=min)
    oriented = [p if p[0] < p[-1] else tuple(reversed(p)) for p in order]

    dense: dict[int, int] = {}
    for p in oriented:
        for v in p:
            dense[v] = len(dense)
    vertex_map = tuple(
        dense[cls(v)] if v in kept else -1 for v in range(parent.n)
    )

    pairs: list[tuple[Link, int]] = []
    for lid, (u, v) in enumerate(parent.links):
        if u not in kept or v not in kept:
            continue
        cu, cv = cls(u), cls(v)
        if cu == cv:
            continue
        pairs.append((link(dense[cu], dense[cv]), lid))
    pairs.sort()
    inst = PapInstance.make(
        [tuple(dense[v] for v in p) for p in oriented],
        [pr for pr, _ in pairs],
    )
    return DerivedInstance(inst, vertex_map, tuple(lid for _, lid in pairs))
