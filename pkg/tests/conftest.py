"""Shared fixtures: two hand-built showcase instances and seeded generators.

``menagerie`` is a 10-path instance exhibiting one of every reducible feature
(a separating path, a contractible triangle, separating path pairs joined by
one or two links, and a degenerate path).  ``cover_gallery`` is an 11-path
instance of 3-vertex paths whose link pool is exactly a minimum link cover;
its track packing has value 5.
"""

from __future__ import annotations

import random

import pytest

from pathaug.core import PapInstance

# Vertex names for the menagerie instance, path by path.
MENAGERIE_NAMES = [
    "a1 a2 a3 a4",
    "b1 b2 b3 b4",
    "c1 c2 c3",
    "d1 d2 d3 d4",
    "e1 e2 e3",
    "f1 f2",
    "g1 g2",
    "h1 h2 h3",
    "i1 i2 i3",
    "j1 j2 j3",
]

MENAGERIE_LINKS = [
    "a2 b3", "a4 a3", "a4 a2", "a1 b1", "a3 b3", "a3 b4",
    "c3 d4", "b1 d2", "b2 d1", "b4 c1", "c1 c3", "c2 f1",
    "d1 e3", "d3 e1", "f1 e1", "f2 e3", "f1 g1", "e3 h3",
    "h2 g1", "h1 g2", "i1 b4", "i2 c1", "i3 c3",
    "j1 j3", "j1 i1", "i3 j3", "i2 j3", "j2 b4", "j2 c1",
]


def _build_named(path_rows: list[str], link_rows: list[str]):
    number: dict[str, int] = {}
    paths = []
    for row in path_rows:
        names = row.split()
        for name in names:
            number[name] = len(number)
        paths.append(tuple(number[name] for name in names))
    links = []
    for row in link_rows:
        a, b = row.split()
        links.append((number[a], number[b]))
    return PapInstance.make(paths, links), number


@pytest.fixture(scope="session")
def menagerie():
    inst, _ = _build_named(MENAGERIE_NAMES, MENAGERIE_LINKS)
    return inst


@pytest.fixture(scope="session")
def menagerie_names():
    _, number = _build_named(MENAGERIE_NAMES, MENAGERIE_LINKS)
    return number


# 11 paths u_i w_i v_i; the link pool is itself a minimum link cover.
COVER_GALLERY_NAMES = [f"u{i} w{i} v{i}" for i in range(1, 12)]

COVER_GALLERY_LINKS = [
    "u1 v1", "u3 v3", "u4 v4", "u11 v11",
    "w1 v2", "w1 u2",
    "v9 w11", "v10 w11",
    "u8 u7",
    "w3 w4", "w3 u6", "w4 u5",
    "v5 u9",
    "v7 w6", "v8 w7", "v6 w8",
    "u10 w9",
]


@pytest.fixture(scope="session")
def cover_gallery():
    inst, _ = _build_named(COVER_GALLERY_NAMES, COVER_GALLERY_LINKS)
    return inst


@pytest.fixture(scope="session")
def cover_gallery_names():
    _, number = _build_named(COVER_GALLERY_NAMES, COVER_GALLERY_LINKS)
    return number


@pytest.fixture
def rng():
    return random.Random(0x5EED)
