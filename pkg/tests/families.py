"""Random tiny families and graphs for checker tests."""

from __future__ import annotations

import random
from itertools import combinations

from spgkit.core import LayerFamily, SubsetPartitionGraph, SymbolUniverse


def _dsets(nbits: int, d: int) -> list[int]:
    return [sum(1 << b for b in c) for c in combinations(range(nbits), d)]


def _split(rng: random.Random, items: list[int], parts: int) -> list[list[int]]:
    rng.shuffle(items)
    parts = max(1, min(parts, len(items)))
    cuts = sorted(rng.sample(range(1, len(items)), parts - 1)) if parts > 1 else []
    bounds = [0] + cuts + [len(items)]
    return [items[a:b] for a, b in zip(bounds, bounds[1:])]


def random_family(rng: random.Random, universe: SymbolUniverse | None = None,
                  d: int | None = None, density: float | None = None) -> LayerFamily:
    if universe is None:
        universe = SymbolUniverse.plain(rng.randint(3, 8))
    nbits = universe.size
    if d is None:
        d = rng.randint(1, min(4, nbits))
    pool = _dsets(nbits, d)
    density = density if density is not None else rng.choice((0.3, 0.6, 1.0))
    chosen = [m for m in pool if rng.random() < density] or [rng.choice(pool)]
    layers = _split(rng, chosen, rng.randint(1, 5))
    return LayerFamily(universe, d, tuple(tuple(l) for l in layers))


def random_graph(rng: random.Random) -> SubsetPartitionGraph:
    L = random_family(rng)
    verts = [tuple(l) for l in L.layers]
    extra = _split(rng, [m for v in verts for m in v], rng.randint(1, 6))
    t = len(extra)
    edges = [(a, b) for a, b in combinations(range(t), 2) if rng.random() < 0.4]
    return SubsetPartitionGraph(L.universe, L.d, tuple(tuple(v) for v in extra), tuple(edges))


def random_sectioned(rng: random.Random) -> LayerFamily:
    nA, nB = rng.randint(2, 4), rng.randint(2, 4)
    u = SymbolUniverse.bipartite(nA, nB)
    d = rng.randint(2, 3)
    L = random_family(rng, u, d, density=rng.choice((0.5, 1.0)))
    t = L.num_layers
    js = sorted(rng.randint(1, d - 1) for _ in range(t))
    return LayerFamily(u, d, L.layers, tuple(js))


def random_doubled(rng: random.Random) -> LayerFamily:
    n = rng.randint(3, 5)
    u = SymbolUniverse.doubled_plain(n)
    half = rng.randint(2, 3)
    d = 2 * half
    pool = _dsets(2 * n, d)
    full = [m for m in pool if all((m >> (2 * i)) & 3 in (0, 3) for i in range(n))]
    chosen = [m for m in pool if (m in full and rng.random() < 0.9) or rng.random() < 0.05]
    chosen = chosen or full
    layers = _split(rng, chosen, rng.randint(1, 3))
    return LayerFamily(u, d, tuple(tuple(l) for l in layers))
