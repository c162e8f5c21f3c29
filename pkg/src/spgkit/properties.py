"""Exhaustive, witness-producing property checkers.

All checkers accept a :class:`LayerFamily` or a :class:`SubsetPartitionGraph`
(path-only properties accept only layer families).  Witness layer indices are
1-based; graph vertex ids are 0-based.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

from .core import (
    ContainmentIndex,
    LayerFamily,
    SubsetPartitionGraph,
    SymbolUniverse,
    all_subsets_of_size,
    bfs_distances,
    count_bounded_submasks,
    full_columns_mask,
    iter_bits,
    mask_key,
    popcount,
    ridges,
    submasks,
)
from .errors import BudgetExceededError, DomainError, InvalidUniverseError

DEFAULT_BUDGET = 5_000_000
DEFAULT_SAMPLES = 20_000


class PropertyKind(str, Enum):
    DIMENSION_REDUCTION = "dimension_reduction"
    ADJACENCY = "adjacency"
    STRONG_ADJACENCY = "strong_adjacency"
    ENDPOINT_COUNT = "endpoint_count"
    COVERING = "covering"
    M_COVERING = "m_covering"
    COMPLETENESS = "completeness"
    LINKAGE = "linkage"
    SECTIONED_COVERING = "sectioned_covering"
    M_SECTIONED_COVERING = "m_sectioned_covering"
    PSEUDOMANIFOLD = "pseudomanifold"
    NORMAL = "normal"
    WIDTH_COVERING = "width_covering"


@dataclass
class VerificationResult:
    property: PropertyKind
    passed: bool
    witness: dict | None = None
    candidates: int = 0
    mode: str = "exhaustive"
    m: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        if self.m is not None:
            return f"{self.property.value}({self.m})"
        return self.property.value

    def to_json(self) -> dict:
        out = {
            "property": self.label,
            "mode": self.mode,
            "passed": self.passed,
            "candidates": self.candidates,
        }
        if self.witness is not None:
            out["witness"] = self.witness
        if self.extra:
            out.update(self.extra)
        return out

    def __bool__(self) -> bool:
        return self.passed


# normalized view ------------------------------------------------------------

@dataclass
class _View:
    universe: SymbolUniverse
    d: int
    vertices: list[tuple[int, ...]]
    adjacency: list[frozenset[int]]
    is_path: bool
    owner: dict[int, int]

    def ser(self, mask: int) -> list:
        return self.universe.serialize_mask(mask)

    def vref(self, i: int) -> dict:
        return {"layer": i + 1} if self.is_path else {"vertex": i}


def _view(G) -> _View:
    if isinstance(G, LayerFamily):
        t = len(G.layers)
        adj = [frozenset(x for x in (i - 1, i + 1) if 0 <= x < t) for i in range(t)]
        verts = list(G.layers)
        is_path = True
    elif isinstance(G, SubsetPartitionGraph):
        adj = list(G.adjacency)
        verts = list(G.vertices)
        is_path = False
    else:
        raise TypeError(f"expected LayerFamily or SubsetPartitionGraph, got {type(G).__name__}")
    owner = {m: i for i, v in enumerate(verts) for m in v}
    return _View(G.universe, G.d, verts, adj, is_path, owner)


def _ridge_map(view: _View) -> dict[int, list[int]]:
    out: dict[int, list[int]] = defaultdict(list)
    for v in view.vertices:
        for m in v:
            for r in ridges(m):
                out[r].append(m)
    return out


def _is_interval(bits: int) -> bool:
    if bits == 0:
        return True
    x = bits >> ((bits & -bits).bit_length() - 1)
    return x & (x + 1) == 0


def _connected_within(adjacency: Sequence[frozenset[int]], active: list[int]) -> list[list[int]]:
    """Connected components of the induced subgraph on ``active``."""
    remaining = set(active)
    comps = []
    while remaining:
        s = min(remaining)
        comp = bfs_distances(adjacency, s, remaining)
        comps.append(sorted(comp))
        remaining -= comp.keys()
    return comps


# dimension reduction --------------------------------------------------------

def check_dimension_reduction(G, budget: int = DEFAULT_BUDGET, samples: int = DEFAULT_SAMPLES,
                              seed: int = 0, force_sampled: bool = False) -> VerificationResult:
    """Active vertices of every F with |F| <= d-1 must induce a connected subgraph."""
    view = _view(G)
    kind = PropertyKind.DIMENSION_REDUCTION
    max_size = view.d - 1
    if max_size < 0:
        return VerificationResult(kind, True)
    members = [m for v in view.vertices for m in v]
    if force_sampled or count_bounded_submasks(members, max_size) > budget:
        return _dr_sampled(view, samples, seed)

    where: dict[int, int] = {}
    for i, v in enumerate(view.vertices):
        bit = 1 << i
        for m in v:
            for c in submasks(m, max_size):
                where[c] = where.get(c, 0) | bit
    bad = None
    cache: dict[int, list[list[int]]] = {}
    for c, vbits in where.items():
        if view.is_path:
            ok = _is_interval(vbits)
        else:
            if vbits not in cache:
                cache[vbits] = _connected_within(view.adjacency, list(iter_bits(vbits)))
            ok = len(cache[vbits]) <= 1
        if not ok and (bad is None or mask_key(c) < mask_key(bad)):
            bad = c
    if bad is None:
        return VerificationResult(kind, True, candidates=len(where))
    return VerificationResult(kind, False, _dr_witness(view, bad, where[bad]), candidates=len(where))


def _dr_witness(view: _View, c: int, vbits: int) -> dict:
    active = list(iter_bits(vbits))
    w: dict = {"F": view.ser(c)}
    if view.is_path:
        w["active_layers"] = [i + 1 for i in active]
    else:
        w["active_vertices"] = active
        w["components"] = _connected_within(view.adjacency, active)
    return w


def _dr_sampled(view: _View, samples: int, seed: int) -> VerificationResult:
    rng = random.Random(seed)
    members = [m for v in view.vertices for m in v]
    index = ContainmentIndex(members, view.universe.size)
    member_vertex = [view.owner[m] for m in members]
    seen: set[int] = set()
    bad = None
    for _ in range(samples):
        m = rng.choice(members)
        bits = list(iter_bits(m))
        size = rng.randint(0, view.d - 1)
        c = 0
        for b in rng.sample(bits, size):
            c |= 1 << b
        if c in seen:
            continue
        seen.add(c)
        vbits = 0
        for idx in iter_bits(index.containers(c)):
            vbits |= 1 << member_vertex[idx]
        if view.is_path:
            ok = _is_interval(vbits)
        else:
            ok = len(_connected_within(view.adjacency, list(iter_bits(vbits)))) <= 1
        if not ok and (bad is None or mask_key(c) < mask_key(bad[0])):
            bad = (c, vbits)
    res = VerificationResult(PropertyKind.DIMENSION_REDUCTION, bad is None,
                             candidates=len(seen), mode="sampled")
    if bad is not None:
        res.witness = _dr_witness(view, *bad)
    return res


def interval_violations(L: LayerFamily, candidates: Iterable[int]) -> list[int]:
    """Candidates whose active layers are not an interval (checked directly)."""
    out = []
    for c in candidates:
        bits = 0
        for k, layer in enumerate(L.layers):
            if any(c & ~m == 0 for m in layer):
                bits |= 1 << k
        if not _is_interval(bits):
            out.append(c)
    return out


# adjacency, strong adjacency, endpoint count --------------------------------

def check_adjacency(G) -> VerificationResult:
    """Every pair of sets meeting in d-1 elements lies in one vertex or adjacent vertices."""
    view = _view(G)
    rmap = _ridge_map(view)
    bad = None
    for r, sets in rmap.items():
        if len(sets) < 2:
            continue
        for a, b in combinations(sets, 2):
            va, vb = view.owner[a], view.owner[b]
            if va != vb and vb not in view.adjacency[va]:
                key = (mask_key(r), mask_key(a), mask_key(b))
                if bad is None or key < bad[0]:
                    bad = (key, a, b, va, vb)
    if bad is None:
        return VerificationResult(PropertyKind.ADJACENCY, True, candidates=len(rmap))
    _, a, b, va, vb = bad
    w = {"sets": [view.ser(a), view.ser(b)], "where": [view.vref(va), view.vref(vb)]}
    return VerificationResult(PropertyKind.ADJACENCY, False, w, candidates=len(rmap))


def check_strong_adjacency(G) -> VerificationResult:
    """Adjacency, plus every edge joins two vertices holding a (d-1)-intersecting pair."""
    view = _view(G)
    adj = check_adjacency(G)
    if not adj.passed:
        return VerificationResult(PropertyKind.STRONG_ADJACENCY, False, adj.witness,
                                  candidates=adj.candidates, extra={"failed_part": "adjacency"})
    rmap = _ridge_map(view)
    linked: set[tuple[int, int]] = set()
    for sets in rmap.values():
        vs = {view.owner[s] for s in sets}
        if len(vs) > 1:
            for a, b in combinations(sorted(vs), 2):
                linked.add((a, b))
    edges = sorted({(min(a, b), max(a, b)) for a in range(len(view.vertices)) for b in view.adjacency[a]})
    for a, b in edges:
        if (a, b) not in linked:
            w = {"edge": [view.vref(a), view.vref(b)]}
            return VerificationResult(PropertyKind.STRONG_ADJACENCY, False, w, candidates=len(edges),
                                      extra={"failed_part": "edge_witness"})
    return VerificationResult(PropertyKind.STRONG_ADJACENCY, True, candidates=len(edges))


def _endpoint(view: _View, kind: PropertyKind) -> VerificationResult:
    rmap = _ridge_map(view)
    bad = None
    for r, sets in rmap.items():
        if len(sets) > 2 and (bad is None or mask_key(r) < mask_key(bad)):
            bad = r
    if bad is None:
        return VerificationResult(kind, True, candidates=len(rmap))
    sets = sorted(rmap[bad], key=mask_key)
    w = {"ridge": view.ser(bad), "containers": [view.ser(s) for s in sets]}
    return VerificationResult(kind, False, w, candidates=len(rmap))


def check_endpoint_count(G) -> VerificationResult:
    """No (d-1)-set lies in more than two member sets."""
    return _endpoint(_view(G), PropertyKind.ENDPOINT_COUNT)


# covering family ------------------------------------------------------------

def _layer_ridge_counts(layer: Sequence[int]) -> dict[int, int]:
    counts: dict[int, int] = defaultdict(int)
    for m in layer:
        for r in ridges(m):
            counts[r] += 1
    return counts


def _first_short(universe_mask: int, size: int, counts: dict[int, int], m: int,
                 budget: int) -> tuple[int, int] | None:
    for n_seen, c in enumerate(all_subsets_of_size(universe_mask, size)):
        if n_seen > budget:
            raise BudgetExceededError("witness search exceeded budget")
        if counts.get(c, 0) < m:
            return c, counts.get(c, 0)
    return None


def check_covering_family(L: LayerFamily, variant: str = "covering", m: int = 1,
                          budget: int = DEFAULT_BUDGET) -> VerificationResult:
    """Covering-type properties of a path family.

    ``variant`` is one of ``covering``, ``m_covering``, ``completeness`` or ``linkage``.
    """
    if not isinstance(L, LayerFamily):
        raise DomainError("covering properties are defined for layer families")
    if variant == "covering":
        return _covering(L, 1, budget, PropertyKind.COVERING, None)
    if variant == "m_covering":
        if m < 1:
            raise DomainError("m must be at least 1")
        return _covering(L, m, budget, PropertyKind.M_COVERING, m)
    if variant == "completeness":
        return _completeness(L, budget)
    if variant == "linkage":
        return _linkage(L)
    raise DomainError(f"unknown covering variant {variant!r}")


def _covering(L: LayerFamily, m: int, budget: int, kind: PropertyKind, mval) -> VerificationResult:
    # every C with |C| <= d-1 lies in some (d-1)-set, so (d-1)-sets suffice
    size = L.d - 1
    N = L.universe.size
    if size < 0:
        return VerificationResult(kind, True, m=mval)
    need = comb(N, size)
    examined = 0
    for k, layer in enumerate(L.layers, start=1):
        counts = _layer_ridge_counts(layer)
        if size == 0:
            counts = {0: len(layer)}
        examined += len(counts)
        good = sum(1 for v in counts.values() if v >= m)
        if good < need:
            found = _first_short(L.universe.full_mask, size, counts, m, budget)
            c, have = found
            w = {"C": L.universe.serialize_mask(c), "layer": k, "containers": have}
            return VerificationResult(kind, False, w, candidates=examined, m=mval)
    return VerificationResult(kind, True, candidates=examined, m=mval)


def _completeness(L: LayerFamily, budget: int) -> VerificationResult:
    N = L.universe.size
    total = comb(N, L.d)
    if total > budget:
        raise BudgetExceededError(f"completeness needs {total} d-sets, budget {budget}")
    present = L.layer_of
    if len(present) == total:
        return VerificationResult(PropertyKind.COMPLETENESS, True, candidates=total)
    for c in all_subsets_of_size(L.universe.full_mask, L.d):
        if c not in present:
            return VerificationResult(PropertyKind.COMPLETENESS, False,
                                      {"missing": L.universe.serialize_mask(c)}, candidates=total)
    raise AssertionError("unreachable")


def _linkage(L: LayerFamily) -> VerificationResult:
    view = _view(L)
    rmap = _ridge_map(view)
    linked: set[int] = set()
    for sets in rmap.values():
        layers = {view.owner[s] for s in sets}
        for i in layers:
            if i + 1 in layers:
                linked.add(i)
    for i in range(len(L.layers) - 1):
        if i not in linked:
            return VerificationResult(PropertyKind.LINKAGE, False, {"layers": [i + 1, i + 2]},
                                      candidates=len(L.layers) - 1)
    return VerificationResult(PropertyKind.LINKAGE, True, candidates=max(0, len(L.layers) - 1))


# sectioned covering ---------------------------------------------------------

def section_shapes(d: int, j: int) -> list[tuple[int, int]]:
    """Maximal (A-size, B-size) shapes of sets constrained by section ``j``."""
    shapes = []
    if d - j >= 0 and j - 1 >= 0:
        shapes.append((d - j, j - 1))
    if d - j - 1 >= 0 and j >= 0:
        shapes.append((d - j - 1, j))
    return shapes


def check_sectioned_covering(L: LayerFamily, m: int = 1,
                             budget: int = DEFAULT_BUDGET) -> VerificationResult:
    """Every C with |C| <= d-1, |C & A| <= d-j, |C & B| <= j has >= m containers in each layer of section j."""
    u = L.universe
    if u.kind != "bipartite":
        raise InvalidUniverseError("sectioned covering needs a plain bipartite universe")
    if L.sections is None:
        raise DomainError("family is not sectioned")
    kind = PropertyKind.SECTIONED_COVERING if m == 1 else PropertyKind.M_SECTIONED_COVERING
    mval = None if m == 1 else m
    d = L.d
    amask, bmask = u.a_mask, u.b_mask
    examined = 0
    for k, (layer, j) in enumerate(zip(L.layers, L.sections), start=1):
        shapes = section_shapes(d, j)
        counts: dict[int, int] = defaultdict(int)
        for e in layer:
            for r in ridges(e):
                if (popcount(r & amask), popcount(r & bmask)) in shapes:
                    counts[r] += 1
        examined += len(counts)
        for a, b in shapes:
            need = comb(u.nA, a) * comb(u.nB, b)
            good = sum(1 for r, v in counts.items()
                       if v >= m and popcount(r & amask) == a)
            if good < need:
                c, have = _first_short_shape(amask, a, bmask, b, counts, m, budget)
                w = {"C": u.serialize_mask(c), "layer": k, "section": j, "containers": have}
                return VerificationResult(kind, False, w, candidates=examined, m=mval)
    return VerificationResult(kind, True, candidates=examined, m=mval)


def _first_short_shape(amask, a, bmask, b, counts, m, budget):
    seen = 0
    for ca in all_subsets_of_size(amask, a):
        for cb in all_subsets_of_size(bmask, b):
            seen += 1
            if seen > budget:
                raise BudgetExceededError("witness search exceeded budget")
            c = ca | cb
            if counts.get(c, 0) < m:
                return c, counts.get(c, 0)
    raise AssertionError("count mismatch without a short candidate")


# width covering -------------------------------------------------------------

def check_width_covering(L: LayerFamily, budget: int = DEFAULT_BUDGET) -> VerificationResult:
    """Every doubled S of width <= d-1 (d = half the set size) is active on every layer."""
    u = L.universe
    if not u.is_doubled:
        raise InvalidUniverseError("width covering is defined on doubled families")
    half = L.d // 2
    size = half - 1
    kind = PropertyKind.WIDTH_COVERING
    if size < 0:
        return VerificationResult(kind, True)
    need = comb(u.n, size)
    base_full = (1 << u.n) - 1
    examined = 0
    for k, layer in enumerate(L.layers, start=1):
        have: set[int] = set()
        for e in layer:
            cols = full_columns_mask(e)
            if popcount(cols) >= size:
                have.update(all_subsets_of_size(cols, size))
        examined += len(have)
        if len(have) < need:
            for n_seen, t in enumerate(all_subsets_of_size(base_full, size)):
                if n_seen > budget:
                    raise BudgetExceededError("witness search exceeded budget")
                if t not in have:
                    w = {"T": u.base().serialize_mask(t), "layer": k}
                    return VerificationResult(kind, False, w, candidates=examined)
    return VerificationResult(kind, True, candidates=examined)


# complexes ------------------------------------------------------------------

def _complex_view(A) -> _View:
    if isinstance(A, (LayerFamily, SubsetPartitionGraph)):
        members = A.members()
        u, d = A.universe, A.d
    else:
        items = list(A)
        if not items:
            raise DomainError("empty complex")
        u = items[0].universe
        d = len(items[0])
        members = [x.mask for x in items]
    return _View(u, d, [tuple(members)], [frozenset()], False, {m: 0 for m in members})


def check_pseudomanifold(A) -> VerificationResult:
    """Each codimension-one face lies in at most two facets."""
    return _endpoint(_complex_view(A), PropertyKind.PSEUDOMANIFOLD)


def check_normal(A, budget: int = DEFAULT_BUDGET) -> VerificationResult:
    """The facets containing each nonempty face form a connected graph under ridge-sharing."""
    view = _complex_view(A)
    facets = list(view.vertices[0])
    d = view.d
    if count_bounded_submasks(facets, d - 2) > budget:
        raise BudgetExceededError("normality check exceeds candidate budget")
    idx = {f: i for i, f in enumerate(facets)}
    rmap = _ridge_map(view)
    nbrs: list[list[int]] = [[] for _ in facets]
    for sets in rmap.values():
        for a, b in combinations(sets, 2):
            nbrs[idx[a]].append(idx[b])
            nbrs[idx[b]].append(idx[a])
    index = ContainmentIndex(facets, view.universe.size)
    # faces of size d-1 or d have stars connected by construction
    faces = sorted({c for f in facets for c in submasks(f, d - 2) if c}, key=mask_key)
    for c in faces:
        star = index.containers(c)
        start = (star & -star).bit_length() - 1
        seen = 1 << start
        stack = [start]
        while stack:
            u = stack.pop()
            for w in nbrs[u]:
                if star >> w & 1 and not seen >> w & 1:
                    seen |= 1 << w
                    stack.append(w)
        if seen != star:
            w = {"face": view.ser(c), "star_size": popcount(star),
                 "reached_from": view.ser(facets[start]), "reached": popcount(seen)}
            return VerificationResult(PropertyKind.NORMAL, False, w, candidates=len(faces))
    return VerificationResult(PropertyKind.NORMAL, True, candidates=len(faces))


# dispatch -------------------------------------------------------------------

PROPERTY_ALIASES = {
    "dr": "dimension_reduction",
    "adj": "adjacency",
    "sa": "strong_adjacency",
    "ec": "endpoint_count",
    "cov": "covering",
    "comp": "completeness",
    "link": "linkage",
    "sc": "sectioned_covering",
    "pm": "pseudomanifold",
    "normal": "normal",
    "wc": "width_covering",
}


def run_property(G, name: str, m: int = 1, budget: int = DEFAULT_BUDGET) -> VerificationResult:
    name = PROPERTY_ALIASES.get(name, name)
    if name == "dimension_reduction":
        return check_dimension_reduction(G, budget=budget)
    if name == "adjacency":
        return check_adjacency(G)
    if name == "strong_adjacency":
        return check_strong_adjacency(G)
    if name == "endpoint_count":
        return check_endpoint_count(G)
    if name in ("covering", "completeness", "linkage"):
        return check_covering_family(G, name, budget=budget)
    if name == "m_covering":
        return check_covering_family(G, "m_covering", m=m, budget=budget)
    if name == "sectioned_covering":
        return check_sectioned_covering(G, m=m, budget=budget)
    if name == "pseudomanifold":
        return check_pseudomanifold(G)
    if name == "normal":
        return check_normal(G, budget=budget)
    if name == "width_covering":
        return check_width_covering(G, budget=budget)
    raise DomainError(f"unknown property {name!r}")
