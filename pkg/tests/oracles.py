"""Brute-force reference implementations used to cross-check the fast checkers.

Everything here enumerates subsets of the whole universe directly, so it is
only usable for universes of at most a dozen or so symbols.
"""

from __future__ import annotations

from itertools import combinations


def bits(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def size(mask: int) -> int:
    return bin(mask).count("1")


def subsets_up_to(nbits: int, k: int):
    for r in range(k + 1):
        for combo in combinations(range(nbits), r):
            yield sum(1 << b for b in combo)


def subsets_exactly(pool: list[int], k: int):
    for combo in combinations(pool, k):
        yield sum(1 << b for b in combo)


def graph_view(G):
    """(vertices, neighbour sets) for a layer family or a graph."""
    if hasattr(G, "layers"):
        verts = [list(l) for l in G.layers]
        nbrs = [{j for j in (i - 1, i + 1) if 0 <= j < len(verts)} for i in range(len(verts))]
    else:
        verts = [list(v) for v in G.vertices]
        nbrs = [set() for _ in verts]
        for a, b in G.edges:
            nbrs[a].add(b)
            nbrs[b].add(a)
    return verts, nbrs


def connected(nodes: set[int], nbrs) -> bool:
    if not nodes:
        return True
    start = next(iter(nodes))
    seen, stack = {start}, [start]
    while stack:
        u = stack.pop()
        for w in nbrs[u]:
            if w in nodes and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == nodes


def dimension_reduction(G) -> bool:
    verts, nbrs = graph_view(G)
    for F in subsets_up_to(G.universe.size, G.d - 1):
        active = {i for i, v in enumerate(verts) if any(F & ~m == 0 for m in v)}
        if active and not connected(active, nbrs):
            return False
    return True


def adjacency(G) -> bool:
    verts, nbrs = graph_view(G)
    owner = {m: i for i, v in enumerate(verts) for m in v}
    for a, b in combinations(owner, 2):
        if size(a & b) == G.d - 1:
            va, vb = owner[a], owner[b]
            if va != vb and vb not in nbrs[va]:
                return False
    return True


def strong_adjacency(G) -> bool:
    if not adjacency(G):
        return False
    verts, nbrs = graph_view(G)
    for a in range(len(verts)):
        for b in nbrs[a]:
            if not any(size(x & y) == G.d - 1 for x in verts[a] for y in verts[b]):
                return False
    return True


def endpoint_count(G) -> bool:
    members = [m for v in graph_view(G)[0] for m in v]
    for R in subsets_exactly(list(range(G.universe.size)), G.d - 1):
        if sum(1 for m in members if R & ~m == 0) > 2:
            return False
    return True


def covering(L, m: int = 1) -> bool:
    for layer in L.layers:
        for F in subsets_up_to(L.universe.size, L.d - 1):
            if sum(1 for e in layer if F & ~e == 0) < m:
                return False
    return True


def completeness(L) -> bool:
    present = set(L.members())
    return all(c in present for c in subsets_exactly(list(range(L.universe.size)), L.d))


def linkage(L) -> bool:
    for x, y in zip(L.layers, L.layers[1:]):
        if not any(size(a & b) == L.d - 1 for a in x for b in y):
            return False
    return True


def sectioned_covering(L, m: int = 1) -> bool:
    u = L.universe
    A, B = u.a_mask, u.b_mask
    for layer, j in zip(L.layers, L.sections):
        for C in subsets_up_to(u.size, L.d - 1):
            if size(C & A) > L.d - j or size(C & B) > j:
                continue
            if sum(1 for e in layer if C & ~e == 0) < m:
                return False
    return True


def project(S: int) -> int:
    out = 0
    for b in bits(S):
        out |= 1 << (b // 2)
    return out


def width_covering(L) -> bool:
    half = L.d // 2
    for layer in L.layers:
        for S in subsets_up_to(L.universe.size, 2 * (half - 1)):
            if size(project(S)) > half - 1:
                continue
            if not any(S & ~e == 0 for e in layer):
                return False
    return True


def pseudomanifold(facets: list[int], d: int, nbits: int) -> bool:
    for R in subsets_exactly(list(range(nbits)), d - 1):
        if sum(1 for f in facets if R & ~f == 0) > 2:
            return False
    return True


def normal(facets: list[int], d: int, nbits: int) -> bool:
    nbrs = [{j for j, g in enumerate(facets) if size(f & g) == d - 1} for f in facets]
    for F in subsets_up_to(nbits, d):
        if not F:
            continue
        star = {i for i, f in enumerate(facets) if F & ~f == 0}
        if star and not connected(star, nbrs):
            return False
    return True


def hypergeom_pmf(N: int, M: int, n: int, k: int):
    """P(X = k) for |S1 & S2| with |S1| = M, |S2| = n, as an exact Fraction."""
    from fractions import Fraction
    from math import comb
    if k < max(0, n + M - N) or k > min(n, M):
        return Fraction(0)
    return Fraction(comb(M, k) * comb(N - M, n - k), comb(N, n))
