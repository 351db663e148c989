"""The cover relaxation: three-vertex paths, shadows, and tracks.

Every instance is relaxed to one where each path has exactly three vertices
``(u, w, v)``: interiors are contracted to ``w`` (two-vertex paths get a dummy
``w``).  A *cover* is a link set giving every endpoint degree at least one and
every path outgoing degree at least two; its optimum lower-bounds the original
instance and is at most twice the number of paths.

Covers are complemented by *tracks*: a track is a simple link path ``Q``
between two path endpoints whose intermediate vertices are interiors, plus the
closing link of each crossed path.  Minimum covers and maximum vertex-disjoint
track packings are two sides of one coin, ``opt_cover = 2 * n_paths -
opt_packing``, and both directions of that equality are implemented here as
explicit constructions (:func:`tracks_to_cover`, :func:`cover_to_tracks`).

Shadow links (weaker copies of a link with ends moved onto interior vertices)
make the track side well-behaved; :func:`deshadow` removes them from covers
again without a size increase.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from .core import Link, PapInstance, link


class RelaxError(RuntimeError):
    """A structural guarantee of the relaxation failed to hold at runtime."""


@dataclass(frozen=True)
class EcpcInstance:
    """A cover-relaxation instance.

    Vertices are dense: path ``i`` is the triple ``(3i, 3i+1, 3i+2)`` for
    ``(u, w, v)``.  ``pap_link[lid]`` is the originating link in the source
    instance (``None`` for shadows), ``shadow_src[lid]`` the shadowed link id
    (``None`` for originals).  Parallel links are distinct ids, as in
    :class:`~pathaug.core.PapInstance`.
    """

    paths: tuple[tuple[int, int, int], ...]
    links: tuple[Link, ...]
    pap_link: tuple[int | None, ...]
    shadow_src: tuple[int | None, ...]
    dummy_interiors: frozenset[int]

    @property
    def n(self) -> int:
        return 3 * len(self.paths)

    @cached_property
    def path_of(self) -> tuple[int, ...]:
        return tuple(v // 3 for v in range(self.n))

    @cached_property
    def endpoint_vertices(self) -> frozenset[int]:
        return frozenset(v for v in range(self.n) if v % 3 != 1)

    def interior(self, path_id: int) -> int:
        return 3 * path_id + 1

    def closing_pair(self, path_id: int) -> Link:
        return (3 * path_id, 3 * path_id + 2)

    def is_cross(self, lid: int) -> bool:
        u, v = self.links[lid]
        return u // 3 != v // 3

    @cached_property
    def ids_by_pair(self) -> dict[Link, tuple[int, ...]]:
        out: dict[Link, list[int]] = {}
        for lid, pr in enumerate(self.links):
            out.setdefault(pr, []).append(lid)
        return {pr: tuple(ids) for pr, ids in out.items()}

    @cached_property
    def link_adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        out: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for lid, (u, v) in enumerate(self.links):
            out[u].append((lid, v))
            out[v].append((lid, u))
        return tuple(tuple(a) for a in out)

    def lowest_id(self, pair: Link, *, avoid: Iterable[int] = ()) -> int | None:
        blocked = set(avoid)
        for lid in self.ids_by_pair.get(pair, ()):
            if lid not in blocked:
                return lid
        return None


def build_2ecpc(instance: PapInstance) -> EcpcInstance:
    """Relax ``instance`` to three-vertex paths.

    Requires every path to have at least two vertices.  Same-path links map to
    their contracted image: closings stay closings, endpoint-to-interior links
    become parallel to a path edge, and interior-to-interior links vanish.
    """
    phi: list[int] = [-1] * instance.n
    dummies: set[int] = set()
    for i, p in enumerate(instance.paths):
        if len(p) < 2:
            raise ValueError(f"path {i} has fewer than two vertices")
        phi[p[0]] = 3 * i
        phi[p[-1]] = 3 * i + 2
        for v in p[1:-1]:
            phi[v] = 3 * i + 1
        if len(p) == 2:
            dummies.add(3 * i + 1)

    entries: list[tuple[Link, int]] = []
    for lid, (a, b) in enumerate(instance.links):
        fa, fb = phi[a], phi[b]
        if fa == fb:
            continue  # both ends inside one contracted interior
        entries.append((link(fa, fb), lid))
    entries.sort()
    return EcpcInstance(
        paths=tuple((3 * i, 3 * i + 1, 3 * i + 2) for i in range(len(instance.paths))),
        links=tuple(pr for pr, _ in entries),
        pap_link=tuple(lid for _, lid in entries),
        shadow_src=(None,) * len(entries),
        dummy_interiors=frozenset(dummies),
    )


# -- shadows ---------------------------------------------------------------


def shadow_pairs(ecpc: EcpcInstance, lid: int) -> tuple[Link, ...]:
    """The weaker variants of a link: endpoint ends moved to their interior."""
    u, v = ecpc.links[lid]
    pu, pv = u // 3, v // 3
    if pu == pv:
        return ()
    wu, wv = ecpc.interior(pu), ecpc.interior(pv)
    u_end, v_end = u % 3 != 1, v % 3 != 1
    if u_end and v_end:
        return (link(u, wv), link(wu, v), link(wu, wv))
    if u_end:
        return (link(wu, v),)
    if v_end:
        return (link(u, wv),)
    return ()


def shadow_complete(ecpc: EcpcInstance) -> EcpcInstance:
    """Add every missing shadow link.  Idempotent; ids are renumbered."""
    present: set[Link] = set(ecpc.links)
    additions: list[tuple[Link, int]] = []
    for lid in range(len(ecpc.links)):
        for pr in shadow_pairs(ecpc, lid):
            if pr not in present:
                present.add(pr)
                additions.append((pr, lid))

    entries: list[tuple[Link, int, int | None, int | None]] = []
    for lid, pr in enumerate(ecpc.links):
        entries.append((pr, lid, ecpc.pap_link[lid], ecpc.shadow_src[lid]))
    for pr, src in additions:
        entries.append((pr, -1, None, src))
    # originals sort before shadows on equal pairs; old ids keep relative order
    entries.sort(key=lambda e: (e[0], e[3] is not None, e[1]))

    old_to_new = {old: new for new, (_, old, _, _) in enumerate(entries) if old != -1}
    return EcpcInstance(
        paths=ecpc.paths,
        links=tuple(pr for pr, _, _, _ in entries),
        pap_link=tuple(pap for _, _, pap, _ in entries),
        shadow_src=tuple(
            None if src is None else old_to_new[src] for _, _, _, src in entries
        ),
        dummy_interiors=ecpc.dummy_interiors,
    )


# -- covers ----------------------------------------------------------------


def cover_feasible(ecpc: EcpcInstance, ids: Iterable[int]) -> bool:
    """Every endpoint touched, every path with outgoing degree at least two."""
    covered: set[int] = set()
    out_deg = [0] * len(ecpc.paths)
    for lid in ids:
        u, v = ecpc.links[lid]
        covered.add(u)
        covered.add(v)
        if u // 3 != v // 3:
            out_deg[u // 3] += 1
            out_deg[v // 3] += 1
    return all(d >= 2 for d in out_deg) and ecpc.endpoint_vertices <= covered


def minimalize_cover(ecpc: EcpcInstance, ids: Iterable[int]) -> set[int]:
    live = set(ids)
    changed = True
    while changed:
        changed = False
        for lid in sorted(live):
            if cover_feasible(ecpc, live - {lid}):
                live.remove(lid)
                changed = True
    return live


def _delta_path(ecpc: EcpcInstance, live: set[int], path_id: int) -> list[int]:
    out = []
    for lid in live:
        u, v = ecpc.links[lid]
        if (u // 3 == path_id) != (v // 3 == path_id):
            out.append(lid)
    return out


def _delta_vertex(ecpc: EcpcInstance, live: set[int], v: int) -> list[int]:
    return [lid for lid in live if v in ecpc.links[lid]]


def deshadow(ecpc: EcpcInstance, ids: Iterable[int]) -> frozenset[int]:
    """Turn a feasible cover into a shadow-free one of no larger size.

    Exchange argument, case by case over how many of a link's weaker variants
    survive minimalization.  Every existence guarantee the argument leans on
    is checked; a violation raises :class:`RelaxError` instead of repairing.
    """
    shadow_ids = frozenset(
        lid for lid in range(len(ecpc.links)) if ecpc.shadow_src[lid] is not None
    )

    def members(lid: int, live: set[int]) -> list[int]:
        prs = {ecpc.links[lid]} | set(shadow_pairs(ecpc, lid))
        return sorted(x for x in live if ecpc.links[x] in prs)

    def pick_non_shadow(cands: Iterable[int], live: set[int]) -> int | None:
        for lid in sorted(set(cands)):
            if lid not in live and lid not in shadow_ids:
                return lid
        return None

    live = minimalize_cover(ecpc, ids)
    if not cover_feasible(ecpc, live):
        raise RelaxError("cover is infeasible before deshadowing")

    for _ in range(4 * len(ecpc.links) + 4):
        if not live & shadow_ids:
            break
        clash = None
        for lid in range(len(ecpc.links)):
            if ecpc.shadow_src[lid] is not None or not ecpc.is_cross(lid):
                continue
            got = members(lid, live)
            if len(got) >= 2 and any(m in shadow_ids for m in got):
                clash = lid
                break
        if clash is None:
            # every family holds at most one member: promote each shadow
            for lid in sorted(live & shadow_ids):
                src = ecpc.shadow_src[lid]
                assert src is not None
                if src in live:
                    raise RelaxError("shadow and its source both survived")
                live.remove(lid)
                live.add(src)
            break

        got = members(clash, live)
        if len(got) > 2:
            raise RelaxError("three family members survived minimalization")
        a, b = ecpc.links[clash]
        u, x = (a, b) if a % 3 != 1 else (b, a)  # u is an endpoint end
        pu, px = u // 3, x // 3
        w = ecpc.interior(pu)
        v = 3 * pu + (2 if u % 3 == 0 else 0)
        z = 3 * px + (2 if x % 3 == 0 else 0)

        def cross_at(vtx: int) -> list[int]:
            return [m for m in _delta_vertex(ecpc, live, vtx) if ecpc.is_cross(m)]

        def outgoing_at(vtx: int, path_id: int) -> Iterator[int]:
            for m, other in ecpc.link_adjacency[vtx]:
                if other // 3 != path_id:
                    yield m

        if x % 3 == 1:
            # the link reaches an interior: its only shadow is w-x
            here = {ecpc.links[m] for m in got}
            if here != {link(u, x), link(w, x)}:
                raise RelaxError("unexpected family members for interior case")
            wx = next(m for m in got if ecpc.links[m] == link(w, x))
            if not cross_at(v):
                held = _delta_vertex(ecpc, live, v)
                if len(held) != 1 or ecpc.links[held[0]] != link(u, v):
                    raise RelaxError("far endpoint held by neither link nor closing")
                repl = pick_non_shadow(outgoing_at(v, pu), live)
                if repl is None:
                    raise RelaxError("no outgoing link at far endpoint")
                live.remove(held[0])
                live.add(repl)
            repl2 = pick_non_shadow(
                itertools.chain.from_iterable(
                    outgoing_at(3 * px + k, px) for k in range(3)
                ),
                live,
            )
            if repl2 is None:
                raise RelaxError("no outgoing replacement on shadowed path")
            live.remove(wx)
            live.add(repl2)
        else:
            # both ends are endpoints: the family is u-x, u-y, w-x, w-y
            strongest = ecpc.lowest_id(link(u, x), avoid=shadow_ids)
            if strongest is None:
                raise RelaxError("family without its original link")
            if all(ecpc.links[m] != link(u, x) for m in got):
                live.remove(got[0])
                live.add(strongest)
                continue
            second = next((m for m in got if ecpc.links[m] != link(u, x)), None)
            if second is None:
                raise RelaxError("parallel twins survived minimalization")
            s_pair = ecpc.links[second]

            if s_pair == link(w, x):
                # the weak end sits on this path: mirror the roles
                conds = ((z, v, pu), (v, z, px))
            else:
                conds = ((v, z, px), (z, v, pu))
            for probe, target, tpath in conds:
                if cross_at(probe):
                    repl = pick_non_shadow(outgoing_at(target, tpath), live)
                    if repl is None:
                        raise RelaxError("no replacement for shadowed member")
                    live.remove(second)
                    live.add(repl)
                    break
            else:
                uv_id = next((m for m in live if ecpc.links[m] == link(u, v)), None)
                xz_id = next((m for m in live if ecpc.links[m] == link(x, z)), None)
                if uv_id is None or xz_id is None:
                    raise RelaxError("isolated far endpoints without closing links")
                repl_v = pick_non_shadow(outgoing_at(v, pu), live)
                repl_z = pick_non_shadow(outgoing_at(z, px), live)
                if repl_v is None or repl_z is None:
                    raise RelaxError("no outgoing links for closing exchange")
                live.remove(uv_id)
                live.add(repl_v)
                live.remove(xz_id)
                live.add(repl_z)
                live.remove(second)
        live = minimalize_cover(ecpc, live)
        if not cover_feasible(ecpc, live):
            raise RelaxError("exchange broke cover feasibility")
    else:
        raise RelaxError("deshadowing did not converge")

    if live & shadow_ids:
        raise RelaxError("shadows survived deshadowing")
    return frozenset(live)


# -- tracks ----------------------------------------------------------------


@dataclass(frozen=True)
class Track:
    """A link path between endpoints plus the closing link of each crossed path."""

    q_vertices: tuple[int, ...]
    q_links: tuple[int, ...]
    i_links: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.q_links) + len(self.i_links)

    def links(self) -> tuple[int, ...]:
        return self.q_links + self.i_links

    def endpoint_set(self) -> frozenset[int]:
        """All path endpoints the track touches (its packing footprint)."""
        out = {self.q_vertices[0], self.q_vertices[-1]}
        for w in self.q_vertices[1:-1]:
            out.add(3 * (w // 3))
            out.add(3 * (w // 3) + 2)
        return frozenset(out)

    def vertices(self) -> frozenset[int]:
        out = set(self.q_vertices)
        for w in self.q_vertices[1:-1]:
            out.add(3 * (w // 3))
            out.add(3 * (w // 3) + 2)
        return frozenset(out)


def validate_track(ecpc: EcpcInstance, track: Track) -> None:
    """Raise ``ValueError`` unless ``track`` is a well-formed track."""
    qv, ql, il = track.q_vertices, track.q_links, track.i_links
    if len(qv) < 2 or len(ql) != len(qv) - 1 or len(il) != len(qv) - 2:
        raise ValueError("track shape mismatch")
    if len(set(qv)) != len(qv):
        raise ValueError("track path revisits a vertex")
    first, last = qv[0], qv[-1]
    if first == last or first % 3 == 1 or last % 3 == 1:
        raise ValueError("track must run between two distinct path endpoints")
    for vtx in qv[1:-1]:
        if vtx % 3 != 1:
            raise ValueError("intermediate track vertices must be interiors")
    for lid, (a, b) in zip(ql, itertools.pairwise(qv)):
        if ecpc.links[lid] != link(a, b):
            raise ValueError(f"link {lid} does not join {a} and {b}")
        if a // 3 == b // 3:
            raise ValueError("track links must join distinct paths")
    crossed = [vtx // 3 for vtx in qv[1:-1]]
    if len(set(crossed)) != len(crossed):
        raise ValueError("track crosses a path twice")
    if {first // 3, last // 3} & set(crossed):
        raise ValueError("track ends on a path it crosses")
    for lid, pi in zip(il, crossed):
        if ecpc.links[lid] != ecpc.closing_pair(pi):
            raise ValueError(f"closing link {lid} does not close path {pi}")


def make_track(ecpc: EcpcInstance, q_vertices: Sequence[int]) -> Track:
    """Build and validate the track along ``q_vertices``, choosing lowest ids."""
    qv = tuple(q_vertices)
    if qv and qv[0] > qv[-1]:
        qv = tuple(reversed(qv))
    ql = []
    for a, b in itertools.pairwise(qv):
        lid = ecpc.lowest_id(link(a, b))
        if lid is None:
            raise ValueError(f"no link joins {a} and {b}")
        ql.append(lid)
    il = []
    for w in qv[1:-1]:
        lid = ecpc.lowest_id(ecpc.closing_pair(w // 3))
        if lid is None:
            raise ValueError(f"no closing link for path {w // 3}")
        il.append(lid)
    track = Track(qv, tuple(ql), tuple(il))
    validate_track(ecpc, track)
    return track


def enumerate_tracks(ecpc: EcpcInstance, max_links: int) -> tuple[Track, ...]:
    """All tracks with at most ``max_links`` links, in canonical order."""
    simple_adj: list[list[int]] = [[] for _ in range(ecpc.n)]
    for v in range(ecpc.n):
        seen: set[int] = set()
        for _, other in ecpc.link_adjacency[v]:
            if other // 3 != v // 3 and other not in seen:
                seen.add(other)
                simple_adj[v].append(other)
        simple_adj[v].sort()

    found: list[tuple[int, ...]] = []

    def extend(path: list[int]) -> None:
        c = path[-1]
        for nxt in simple_adj[c]:
            if nxt in path:
                continue
            if nxt % 3 != 1:  # reached an endpoint: a complete track
                if (
                    path[0] < nxt
                    and len(path) * 2 - 1 <= max_links
                    and all(p // 3 != nxt // 3 for p in path[1:])
                ):
                    found.append(tuple(path) + (nxt,))
                continue
            if ecpc.lowest_id(ecpc.closing_pair(nxt // 3)) is None:
                continue
            if any(p // 3 == nxt // 3 for p in path):
                continue
            if (len(path) + 1) * 2 - 1 > max_links:
                continue
            path.append(nxt)
            extend(path)
            path.pop()

    for start in sorted(ecpc.endpoint_vertices):
        extend([start])
    return tuple(make_track(ecpc, qv) for qv in sorted(found))


def format_track(ecpc: EcpcInstance, track: Track) -> str:
    q = "-".join(map(str, track.q_vertices))
    if not track.i_links:
        return f"track q: {q}"
    i = " ".join(f"{a}-{b}" for a, b in (ecpc.links[lid] for lid in track.i_links))
    return f"track q: {q} i: {i}"


def parse_track(ecpc: EcpcInstance, text: str) -> Track:
    parts = text.split()
    if parts[:2] != ["track", "q:"] or len(parts) < 3:
        raise ValueError(f"not a track line: {text!r}")
    qv = [int(tok) for tok in parts[2].split("-")]
    return make_track(ecpc, qv)


# -- tracks to cover -------------------------------------------------------


def tracks_to_cover(ecpc: EcpcInstance, tracks: Sequence[Track]) -> frozenset[int]:
    """A cover from a disjoint track packing.

    All track links, plus one outgoing link for every endpoint no track
    touches; the picks are kept distinct so the size is exactly
    ``2 * n_paths - len(tracks)``.
    """
    used: set[int] = set()
    touched: set[int] = set()
    for t in tracks:
        validate_track(ecpc, t)
        if touched & t.vertices():
            raise ValueError("tracks are not vertex-disjoint")
        touched.update(t.vertices())
        used.update(t.links())
    for u in sorted(ecpc.endpoint_vertices):
        if u in touched:
            continue
        lid = next(
            (
                m
                for m, other in ecpc.link_adjacency[u]
                if other // 3 != u // 3 and m not in used
            ),
            None,
        )
        if lid is None:
            raise RelaxError(f"endpoint {u} has no fresh outgoing link")
        used.add(lid)
    return frozenset(used)


# -- cover to tracks -------------------------------------------------------


@dataclass
class CoverToTracks:
    """Result of the cover decomposition: tracks plus per-path leftover tokens."""

    tracks: tuple[Track, ...]
    tokens: dict[int, int]

    @property
    def value(self) -> int:
        return len(self.tracks)


def cover_to_tracks(ecpc: EcpcInstance, ids: Iterable[int]) -> CoverToTracks:
    """Decompose a feasible cover into vertex-disjoint tracks.

    Links are traded for tokens while the covering invariant survives, the
    remainder is normalized onto interior vertices, cycles of closed paths are
    cashed out, and what is left reads off as tracks.  One token is minted per
    removed link, so ``len(cover) == total track size + total tokens`` and the
    number of tracks is at least ``2 * n_paths - len(cover)``.

    The instance must be shadow-complete; the intermediate structure the trade
    relies on is asserted, and a violation raises :class:`RelaxError`.
    """
    if not cover_feasible(ecpc, ids):
        raise RelaxError("cover is infeasible")
    live = minimalize_cover(ecpc, ids)
    n_paths = len(ecpc.paths)
    if len(live) > 2 * n_paths:
        raise RelaxError("minimal cover exceeds twice the path count")
    size_in = len(live)
    tok: dict[int, int] = {v: 0 for v in range(ecpc.n)}

    # A same-path link other than the closing covers just its endpoint end, so
    # it trades for a token on that endpoint straight away.
    for lid in sorted(live):
        a, b = ecpc.links[lid]
        if a // 3 == b // 3 and link(a, b) != ecpc.closing_pair(a // 3):
            live.remove(lid)
            tok[a if a % 3 != 1 else b] += 1

    def t_path(pi: int) -> int:
        return tok[3 * pi] + tok[3 * pi + 1] + tok[3 * pi + 2]

    def d_path(pi: int) -> int:
        return len(_delta_path(ecpc, live, pi))

    def d_vertex(v: int) -> int:
        return len(_delta_vertex(ecpc, live, v))

    def closing_of(pi: int) -> int | None:
        return next((m for m in live if ecpc.links[m] == ecpc.closing_pair(pi)), None)

    def spread(pi: int, total: int) -> None:
        for v in (3 * pi, 3 * pi + 1, 3 * pi + 2):
            tok[v] = 0
        tok[3 * pi] = 1
        tok[3 * pi + 2] = total - 1

    def greedy_pick() -> tuple[int, int] | None:
        """The next removable link and the tip its token goes to.

        Orientations whose far path has spare outgoing degree come first, and
        tokens prefer endpoint tips; both preferences keep the structural
        claims checked below provable.
        """
        best: tuple[tuple[int, int, int], int, int] | None = None
        for lid in sorted(live):
            if not ecpc.is_cross(lid):
                continue
            a, b = ecpc.links[lid]
            for tip, far in ((a, b), (b, a)):
                pf = far // 3
                if d_path(pf) + t_path(pf) < 3:
                    continue
                if far % 3 != 1 and d_vertex(far) + tok[far] < 2:
                    continue
                key = (0 if d_path(pf) >= 3 else 1, 0 if tip % 3 != 1 else 1, lid)
                if best is None or key < best[0]:
                    best = (key, lid, tip)
        if best is None:
            return None
        return best[1], best[2]

    def quasi_greedy_pick() -> tuple[int, int, int, int] | None:
        for lid in sorted(live):
            if not ecpc.is_cross(lid):
                continue
            a, b = ecpc.links[lid]
            for tip, far in ((a, b), (b, a)):
                pf = far // 3
                closing = closing_of(pf)
                if d_path(pf) == 1 and t_path(pf) == 1 and closing is not None:
                    return lid, tip, pf, closing
        return None

    # The trade loop: greedy and quasi-greedy removals plus closing cash-ins,
    # run to a joint fixpoint (each kind can re-enable the others).  Tokens are
    # eagerly pushed onto endpoints, which is what keeps trades available.
    while True:
        for pi in range(n_paths):
            if t_path(pi) >= 2 and (tok[3 * pi] < 1 or tok[3 * pi + 2] < 1):
                spread(pi, t_path(pi))
        hit = greedy_pick()
        if hit is not None:
            lid, tip = hit
            live.remove(lid)
            tok[tip] += 1
            continue
        qhit = quasi_greedy_pick()
        if qhit is not None:
            lid, tip, pf, closing = qhit
            live.remove(lid)
            tok[tip] += 1
            live.remove(closing)
            spread(pf, 2)
            continue
        third = next(
            (
                (pi, m)
                for pi in range(n_paths)
                if t_path(pi) >= 1 and (m := closing_of(pi)) is not None
            ),
            None,
        )
        if third is not None:
            pi, m = third
            live.remove(m)
            spread(pi, t_path(pi) + 1)
            continue
        break

    for pi in range(n_paths):
        total = t_path(pi)
        u, v = 3 * pi, 3 * pi + 2
        if total >= 2 and (d_path(pi) != 0 or closing_of(pi) is not None):
            raise RelaxError("token-rich path still carries links")
        if total == 1 and sorted((d_vertex(u), d_vertex(v))) != [0, 1]:
            raise RelaxError("one-token path lacks the expected link split")
        if total == 0 and d_path(pi) != 2:
            raise RelaxError("token-free path must keep exactly two outgoing links")
        if closing_of(pi) is not None and total != 0:
            raise RelaxError("closed path must be token-free")
    for m in sorted(live):
        a, b = ecpc.links[m]
        if a // 3 == b // 3:
            continue
        for tip, far in ((a, b), (b, a)):
            if tip % 3 != 1 and far % 3 == 1:
                pf = far // 3
                if t_path(pf) != 0 or closing_of(pf) is None:
                    raise RelaxError("endpoint-to-interior link without closed far path")

    # A cross link at an endpoint whose own closing survived slides to the
    # interior shadow, so closed paths are entered only through interiors.
    while True:
        pick = None
        for m in sorted(live):
            a, b = ecpc.links[m]
            if a // 3 == b // 3:
                continue
            for tip, far in ((a, b), (b, a)):
                if tip % 3 != 1 and closing_of(tip // 3) is not None:
                    pick = (m, tip, far)
                    break
            if pick:
                break
        if pick is None:
            break
        m, tip, far = pick
        shadow = ecpc.lowest_id(link(ecpc.interior(tip // 3), far), avoid=live)
        if shadow is None:
            raise RelaxError("not shadow-complete: endpoint link cannot slide")
        live.remove(m)
        live.add(shadow)

    # Cycles running purely through closed paths are cashed out for tokens.
    while True:
        closed = {pi: m for pi in range(n_paths) if (m := closing_of(pi)) is not None}
        adj: dict[int, list[tuple[int, int]]] = {pi: [] for pi in closed}
        for m in sorted(live):
            a, b = ecpc.links[m]
            pa, pb = a // 3, b // 3
            if pa != pb and pa in closed and pb in closed:
                adj[pa].append((m, pb))
                adj[pb].append((m, pa))
        cycle = _find_cycle(adj)
        if cycle is None:
            break
        cyc_paths, cyc_links = cycle
        for m in cyc_links:
            live.remove(m)
        for pi in cyc_paths:
            live.remove(closed[pi])
            tok[3 * pi] += 1
            tok[3 * pi + 2] += 1

    # Read the survivors off as tracks.
    remaining = set(live)

    def live_cross_at(v: int) -> list[tuple[int, int]]:
        return [
            (m, other)
            for m, other in ecpc.link_adjacency[v]
            if m in remaining and other // 3 != v // 3
        ]

    tracks: list[Track] = []
    for s in sorted(ecpc.endpoint_vertices):
        here = live_cross_at(s)
        if len(here) != 1:
            continue
        qv = [s]
        m, nxt = here[0]
        remaining.remove(m)
        while nxt % 3 == 1:
            qv.append(nxt)
            closing = next(
                (m2 for m2 in remaining if ecpc.links[m2] == ecpc.closing_pair(nxt // 3)),
                None,
            )
            if closing is None:
                raise RelaxError("crossed path lost its closing link")
            remaining.remove(closing)
            onward = live_cross_at(nxt)
            if len(onward) != 1:
                raise RelaxError("interior vertex does not chain onward")
            m, nxt = onward[0]
            remaining.remove(m)
        qv.append(nxt)
        tracks.append(make_track(ecpc, qv))

    if remaining:
        raise RelaxError("leftover links after track extraction")

    if sum(t.size for t in tracks) + sum(tok.values()) != size_in:
        raise RelaxError("link-for-token accounting does not balance")
    path_tokens = {pi: t_path(pi) for pi in range(n_paths) if t_path(pi)}
    return CoverToTracks(tuple(tracks), path_tokens)


def _find_cycle(
    adj: dict[int, list[tuple[int, int]]]
) -> tuple[list[int], set[int]] | None:
    """A simple cycle in a multigraph given as ``node -> [(edge, other)]``.

    Returns the cycle's nodes and edge ids; parallel edges count as a
    two-cycle.  ``None`` if the graph is a forest.
    """
    seen: set[int] = set()
    for root in sorted(adj):
        if root in seen:
            continue
        prev: dict[int, tuple[int, int] | None] = {root: None}
        stack = [root]
        while stack:
            node = stack.pop()
            seen.add(node)
            step = prev[node]
            in_edge = step[1] if step is not None else -1
            for m, other in adj[node]:
                if m == in_edge:
                    continue
                if other not in prev:
                    prev[other] = (node, m)
                    stack.append(other)
                    continue
                # a non-tree edge closes a cycle through the common ancestor
                path_a = _walk_back(prev, node)
                path_b = _walk_back(prev, other)
                common = {n for n, _ in path_a} & {n for n, _ in path_b}
                cut_a = next(i for i, (n, _) in enumerate(path_a) if n in common)
                cut_b = next(i for i, (n, _) in enumerate(path_b) if n in common)
                if path_a[cut_a][0] != path_b[cut_b][0]:
                    continue
                nodes = [n for n, _ in path_a[: cut_a + 1]]
                nodes += [n for n, _ in reversed(path_b[:cut_b])]
                edges = {m}
                edges.update(e for _, e in path_a[:cut_a])
                edges.update(e for _, e in path_b[:cut_b])
                return nodes, edges
    return None


def _walk_back(
    prev: dict[int, tuple[int, int] | None], node: int
) -> list[tuple[int, int]]:
    """Nodes from ``node`` up to the root, with the edge leading out of each."""
    out: list[tuple[int, int]] = []
    cur: int | None = node
    while cur is not None:
        step = prev[cur]
        if step is None:
            out.append((cur, -1))
            cur = None
        else:
            parent, edge = step
            out.append((cur, edge))
            cur = parent
    return out


def realize_tracks(ecpc: EcpcInstance, tracks: Sequence[Track]) -> frozenset[int]:
    """Map a disjoint track packing to links of the source instance.

    A shadow link realizes as the link it shadows; the resulting source links
    are pairwise distinct for vertex-disjoint tracks.
    """
    out: set[int] = set()
    for t in tracks:
        for lid in t.links():
            src = ecpc.shadow_src[lid]
            base = lid if src is None else src
            pap = ecpc.pap_link[base]
            if pap is None:
                raise RelaxError("track link has no source counterpart")
            if pap in out:
                raise RelaxError("two track links realize to the same source link")
            out.add(pap)
    return frozenset(out)
