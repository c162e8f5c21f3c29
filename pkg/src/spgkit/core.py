"""Symbol universes, face sets, layer families and subset partition graphs.

Face sets are stored as integer bit masks.  A plain symbol ``i`` (1-based)
occupies bit ``i - 1``; a doubled symbol ``(row, i)`` occupies bit
``2 * (i - 1) + (row - 1)``, so the two cells of column ``i`` are adjacent
bits.  Bipartite universes put class A on symbols ``1..nA`` and class B on
``nA + 1 .. nA + nB``.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Iterator, Sequence

from .errors import (
    ConnectivityError,
    DiameterUndefinedError,
    InvalidFamilyError,
    InvalidUniverseError,
)

PLAIN = "plain"
DOUBLED = "doubled"
BIPARTITE = "bipartite"
DOUBLED_BIPARTITE = "doubled_bipartite"
_KINDS = (PLAIN, DOUBLED, BIPARTITE, DOUBLED_BIPARTITE)


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def submasks(mask: int, max_size: int | None = None) -> Iterator[int]:
    """All submasks of ``mask`` (including 0 and ``mask``), optionally size-capped."""
    sub = mask
    while True:
        if max_size is None or popcount(sub) <= max_size:
            yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def ridges(mask: int) -> list[int]:
    """Masks obtained by deleting one element."""
    return [mask ^ (1 << b) for b in iter_bits(mask)]


def mask_key(mask: int) -> tuple[int, tuple[int, ...]]:
    """Canonical order: by size, then lexicographically by bit positions."""
    return (popcount(mask), tuple(iter_bits(mask)))


@dataclass(frozen=True)
class SymbolUniverse:
    kind: str
    nA: int
    nB: int = 0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise InvalidUniverseError(f"unknown universe kind {self.kind!r}")
        if self.nA < 0 or self.nB < 0:
            raise InvalidUniverseError("symbol counts must be non-negative")
        if self.kind in (PLAIN, DOUBLED) and self.nB != 0:
            raise InvalidUniverseError("non-bipartite universes have nB = 0")

    @classmethod
    def plain(cls, n: int) -> "SymbolUniverse":
        return cls(PLAIN, n)

    @classmethod
    def doubled_plain(cls, n: int) -> "SymbolUniverse":
        return cls(DOUBLED, n)

    @classmethod
    def bipartite(cls, nA: int, nB: int) -> "SymbolUniverse":
        return cls(BIPARTITE, nA, nB)

    @classmethod
    def doubled_bipartite(cls, nA: int, nB: int) -> "SymbolUniverse":
        return cls(DOUBLED_BIPARTITE, nA, nB)

    @property
    def n(self) -> int:
        return self.nA + self.nB

    @property
    def is_doubled(self) -> bool:
        return self.kind in (DOUBLED, DOUBLED_BIPARTITE)

    @property
    def is_bipartite(self) -> bool:
        return self.kind in (BIPARTITE, DOUBLED_BIPARTITE)

    @property
    def size(self) -> int:
        """Number of symbols in the universe."""
        return 2 * self.n if self.is_doubled else self.n

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def doubled(self) -> "SymbolUniverse":
        if self.is_doubled:
            raise InvalidUniverseError("universe is already doubled")
        kind = DOUBLED_BIPARTITE if self.is_bipartite else DOUBLED
        return SymbolUniverse(kind, self.nA, self.nB)

    def base(self) -> "SymbolUniverse":
        if not self.is_doubled:
            raise InvalidUniverseError("universe is not doubled")
        kind = BIPARTITE if self.is_bipartite else PLAIN
        return SymbolUniverse(kind, self.nA, self.nB)

    @property
    def a_mask(self) -> int:
        """Mask of base symbols in class A (all symbols for non-bipartite kinds)."""
        return (1 << self.nA) - 1

    @property
    def b_mask(self) -> int:
        return ((1 << self.n) - 1) ^ self.a_mask

    def encode(self, symbol) -> int:
        """Bit index of a symbol given as int, (row, i) pair, or "row:i" string."""
        if self.is_doubled:
            if isinstance(symbol, str):
                row_s, _, i_s = symbol.partition(":")
                row, i = int(row_s), int(i_s)
            else:
                row, i = symbol
            if row not in (1, 2) or not 1 <= i <= self.n:
                raise InvalidUniverseError(f"symbol {symbol!r} outside doubled universe of size {self.n}")
            return 2 * (i - 1) + (row - 1)
        if isinstance(symbol, bool) or not isinstance(symbol, int):
            raise InvalidUniverseError(f"plain universe expects integer symbols, got {symbol!r}")
        if not 1 <= symbol <= self.n:
            raise InvalidUniverseError(f"symbol {symbol} outside 1..{self.n}")
        return symbol - 1

    def decode(self, bit: int):
        if self.is_doubled:
            return (bit % 2 + 1, bit // 2 + 1)
        return bit + 1

    def mask_of(self, symbols: Iterable) -> int:
        mask = 0
        for s in symbols:
            mask |= 1 << self.encode(s)
        return mask

    def symbols_of(self, mask: int) -> list:
        return [self.decode(b) for b in iter_bits(mask)]

    def serialize_symbol(self, bit: int):
        if self.is_doubled:
            row, i = self.decode(bit)
            return f"{row}:{i}"
        return bit + 1

    def serialize_mask(self, mask: int) -> list:
        return [self.serialize_symbol(b) for b in iter_bits(mask)]

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.is_bipartite:
            out.update(nA=self.nA, nB=self.nB)
        else:
            out["n"] = self.nA
        return out

    @classmethod
    def from_json(cls, data: dict) -> "SymbolUniverse":
        kind = data["kind"]
        if kind in (PLAIN, DOUBLED):
            return cls(kind, int(data["n"]))
        return cls(kind, int(data["nA"]), int(data["nB"]))


# mask-level doubling algebra ------------------------------------------------

def double_mask(mask: int) -> int:
    out = 0
    for b in iter_bits(mask):
        out |= 3 << (2 * b)
    return out


def project_mask(mask: int) -> int:
    out = 0
    for b in iter_bits(mask):
        out |= 1 << (b >> 1)
    return out


def full_columns_mask(mask: int) -> int:
    """Base symbols whose two cells both lie in the doubled ``mask``."""
    both = mask & (mask >> 1) & _EVEN_BITS
    return project_mask(both)


_EVEN_BITS = int("01" * 256, 2)


def row_mask(mask: int, row: int) -> int:
    """Base symbols occupied in the given row (1 or 2) of a doubled mask."""
    return project_mask(mask & (_EVEN_BITS << (row - 1)))


def make_doubled(row1: int, row2: int) -> int:
    """Doubled mask whose first row is ``row1`` and second row is ``row2`` (base masks)."""
    out = 0
    for b in iter_bits(row1):
        out |= 1 << (2 * b)
    for b in iter_bits(row2):
        out |= 1 << (2 * b + 1)
    return out


# face sets ------------------------------------------------------------------

@dataclass(frozen=True)
class FaceSet:
    universe: SymbolUniverse
    mask: int

    def __post_init__(self) -> None:
        if self.mask < 0 or self.mask & ~self.universe.full_mask:
            raise InvalidUniverseError("face set has members outside its universe")

    @classmethod
    def of(cls, universe: SymbolUniverse, symbols: Iterable) -> "FaceSet":
        return cls(universe, universe.mask_of(symbols))

    @property
    def members(self) -> list:
        return self.universe.symbols_of(self.mask)

    def __len__(self) -> int:
        return popcount(self.mask)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, symbol) -> bool:
        return bool(self.mask >> self.universe.encode(symbol) & 1)

    def issubset(self, other: "FaceSet") -> bool:
        _same_universe(self, other)
        return self.mask & ~other.mask == 0

    def __le__(self, other: "FaceSet") -> bool:
        return self.issubset(other)

    def __or__(self, other: "FaceSet") -> "FaceSet":
        _same_universe(self, other)
        return FaceSet(self.universe, self.mask | other.mask)

    def __and__(self, other: "FaceSet") -> "FaceSet":
        _same_universe(self, other)
        return FaceSet(self.universe, self.mask & other.mask)

    def __sub__(self, other: "FaceSet") -> "FaceSet":
        _same_universe(self, other)
        return FaceSet(self.universe, self.mask & ~other.mask)

    def serialize(self) -> list:
        return self.universe.serialize_mask(self.mask)

    def __repr__(self) -> str:
        return f"FaceSet({self.members})"


def _same_universe(a: FaceSet, b: FaceSet) -> None:
    if a.universe != b.universe:
        raise InvalidUniverseError("face sets live in different universes")


def double(C: FaceSet) -> FaceSet:
    """D(C) = [2] x C."""
    if C.universe.is_doubled:
        raise InvalidUniverseError("cannot double a set over a doubled universe")
    return FaceSet(C.universe.doubled(), double_mask(C.mask))


def project(S: FaceSet) -> FaceSet:
    """Vertical projection onto the base symbols."""
    if not S.universe.is_doubled:
        raise InvalidUniverseError("projection needs a doubled universe")
    return FaceSet(S.universe.base(), project_mask(S.mask))


def width(S: FaceSet) -> int:
    if not S.universe.is_doubled:
        raise InvalidUniverseError("width is defined on doubled universes")
    return popcount(project_mask(S.mask))


def awidth(S: FaceSet) -> int:
    if S.universe.kind != DOUBLED_BIPARTITE:
        raise InvalidUniverseError("A-width needs a doubled bipartite universe")
    return popcount(project_mask(S.mask) & S.universe.a_mask)


def bwidth(S: FaceSet) -> int:
    if S.universe.kind != DOUBLED_BIPARTITE:
        raise InvalidUniverseError("B-width needs a doubled bipartite universe")
    return popcount(project_mask(S.mask) & S.universe.b_mask)


# families -------------------------------------------------------------------

def _as_mask(universe: SymbolUniverse, item) -> int:
    if isinstance(item, FaceSet):
        if item.universe != universe:
            raise InvalidUniverseError("face set universe does not match family")
        return item.mask
    if isinstance(item, int):
        return item
    return universe.mask_of(item)


@dataclass(frozen=True)
class LayerFamily:
    """An ordered partition of a collection of d-sets into nonempty layers.

    ``layers`` holds bit masks; each layer is sorted in canonical order.
    ``sections`` optionally assigns a section number to every layer.
    """

    universe: SymbolUniverse
    d: int
    layers: tuple[tuple[int, ...], ...]
    sections: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        canon = tuple(tuple(sorted(set(layer), key=mask_key)) for layer in self.layers)
        object.__setattr__(self, "layers", canon)
        if self.sections is not None:
            object.__setattr__(self, "sections", tuple(int(s) for s in self.sections))
        self._validate()

    def _validate(self) -> None:
        if not self.layers:
            raise InvalidFamilyError("a layer family needs at least one layer")
        seen: set[int] = set()
        full = self.universe.full_mask
        for k, layer in enumerate(self.layers, start=1):
            if not layer:
                raise InvalidFamilyError(f"layer {k} is empty")
            for m in layer:
                if m & ~full:
                    raise InvalidUniverseError(f"layer {k} has a set outside the universe")
                if popcount(m) != self.d:
                    raise InvalidFamilyError(
                        f"layer {k} has a set of size {popcount(m)}, expected {self.d}")
                if m in seen:
                    raise InvalidFamilyError(f"set repeated across layers (layer {k})")
                seen.add(m)
        if self.sections is not None:
            if len(self.sections) != len(self.layers):
                raise InvalidFamilyError("sectioning must label every layer")
            if any(a > b for a, b in zip(self.sections, self.sections[1:])):
                raise InvalidFamilyError("section numbers must be nondecreasing")

    @classmethod
    def build(cls, universe: SymbolUniverse, d: int, layers: Sequence[Iterable],
              sections: Sequence[int] | None = None) -> "LayerFamily":
        """Build from layers given as FaceSets, masks or symbol iterables."""
        masks = tuple(tuple(_as_mask(universe, s) for s in layer) for layer in layers)
        return cls(universe, d, masks, tuple(sections) if sections is not None else None)

    def __len__(self) -> int:
        return len(self.layers)

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def layer_sets(self, k: int) -> list[FaceSet]:
        """Layer ``k`` (1-based) as face sets."""
        return [FaceSet(self.universe, m) for m in self.layers[k - 1]]

    def members(self) -> list[int]:
        return [m for layer in self.layers for m in layer]

    @cached_property
    def layer_of(self) -> dict[int, int]:
        """Map from member mask to its 1-based layer index."""
        return {m: k for k, layer in enumerate(self.layers, start=1) for m in layer}

    def section_indices(self, j: int) -> list[int]:
        """1-based indices of the layers in section ``j``."""
        if self.sections is None:
            raise InvalidFamilyError("family is not sectioned")
        return [k for k, s in enumerate(self.sections, start=1) if s == j]

    def section_numbers(self) -> list[int]:
        if self.sections is None:
            return []
        return sorted(set(self.sections))

    def as_graph(self) -> "SubsetPartitionGraph":
        t = len(self.layers)
        return SubsetPartitionGraph(self.universe, self.d, self.layers,
                                    tuple((i, i + 1) for i in range(t - 1)))

    def to_json(self) -> dict:
        out: dict = {
            "universe": self.universe.to_json(),
            "d": self.d,
            "layers": [[self.universe.serialize_mask(m) for m in layer] for layer in self.layers],
        }
        if self.sections is not None:
            out["sections"] = list(self.sections)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "LayerFamily":
        universe = SymbolUniverse.from_json(data["universe"])
        return cls.build(universe, int(data["d"]), data["layers"], data.get("sections"))


@dataclass(frozen=True)
class SubsetPartitionGraph:
    """A connected simple graph whose vertices partition a collection of d-sets."""

    universe: SymbolUniverse
    d: int
    vertices: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self) -> None:
        verts = tuple(tuple(sorted(set(v), key=mask_key)) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        norm = set()
        for a, b in self.edges:
            if a == b:
                raise InvalidFamilyError("self-loops are not allowed")
            if not (0 <= a < len(verts) and 0 <= b < len(verts)):
                raise InvalidFamilyError(f"edge ({a}, {b}) references a missing vertex")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", tuple(sorted(norm)))
        if not verts:
            raise InvalidFamilyError("graph needs at least one vertex")
        seen: set[int] = set()
        for i, v in enumerate(verts):
            if not v:
                raise InvalidFamilyError(f"vertex {i} holds no sets")
            for m in v:
                if popcount(m) != self.d:
                    raise InvalidFamilyError(f"vertex {i} holds a set of the wrong size")
                if m & ~self.universe.full_mask:
                    raise InvalidUniverseError(f"vertex {i} holds a set outside the universe")
                if m in seen:
                    raise InvalidFamilyError("vertex collections must be disjoint")
                seen.add(m)

    @classmethod
    def build(cls, universe: SymbolUniverse, d: int, vertices: Sequence[Iterable],
              edges: Iterable[tuple[int, int]]) -> "SubsetPartitionGraph":
        masks = tuple(tuple(_as_mask(universe, s) for s in v) for v in vertices)
        return cls(universe, d, masks, tuple(edges))

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        nbrs: list[set[int]] = [set() for _ in self.vertices]
        for a, b in self.edges:
            nbrs[a].add(b)
            nbrs[b].add(a)
        return tuple(frozenset(s) for s in nbrs)

    @property
    def connected(self) -> bool:
        return len(bfs_distances(self.adjacency, 0)) == len(self.vertices)

    def members(self) -> list[int]:
        return [m for v in self.vertices for m in v]

    def is_path(self) -> bool:
        t = len(self.vertices)
        return self.edges == tuple((i, i + 1) for i in range(t - 1))


def bfs_distances(adjacency: Sequence[Iterable[int]], source: int,
                  allowed: set[int] | None = None) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adjacency[u]:
            if w not in dist and (allowed is None or w in allowed):
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def _graph_of(G) -> SubsetPartitionGraph:
    return G.as_graph() if isinstance(G, LayerFamily) else G


def diameter(G: "SubsetPartitionGraph | LayerFamily") -> int:
    if isinstance(G, LayerFamily):
        return len(G.layers) - 1
    best = 0
    for s in range(len(G.vertices)):
        dist = bfs_distances(G.adjacency, s)
        if len(dist) != len(G.vertices):
            raise ConnectivityError("diameter of a disconnected graph is undefined")
        best = max(best, max(dist.values()))
    return best


def eccentricities(G: SubsetPartitionGraph) -> list[int]:
    out = []
    for s in range(len(G.vertices)):
        dist = bfs_distances(G.adjacency, s)
        if len(dist) != len(G.vertices):
            raise ConnectivityError("graph is disconnected")
        out.append(max(dist.values()))
    return out


def hirsch_ratio(G: "SubsetPartitionGraph | LayerFamily") -> Fraction:
    """Diameter divided by the number of symbols of the universe."""
    size = G.universe.size
    if size == 0:
        raise DiameterUndefinedError("empty universe")
    return Fraction(diameter(G), size)


def active_layers(L: LayerFamily, C) -> list[int]:
    """1-based indices of layers holding some member that contains ``C``."""
    c = _as_mask(L.universe, C)
    return [k for k, layer in enumerate(L.layers, start=1)
            if any(c & ~m == 0 for m in layer)]


def active_vertices(G, C) -> list[int]:
    """0-based vertex ids of a graph (or layer family) whose sets contain ``C``."""
    g = _graph_of(G)
    c = _as_mask(g.universe, C)
    return [i for i, v in enumerate(g.vertices) if any(c & ~m == 0 for m in v)]


def active_candidate_masks(members: Iterable[int], max_size: int) -> set[int]:
    out: set[int] = set()
    for m in members:
        out.update(submasks(m, max_size))
    return out


def enumerate_active_candidates(L: "LayerFamily | SubsetPartitionGraph",
                                max_size: int) -> Iterator[FaceSet]:
    """Every set of size <= ``max_size`` contained in some member, once, in canonical order."""
    cands = active_candidate_masks(L.members(), max_size)
    for c in sorted(cands, key=mask_key):
        yield FaceSet(L.universe, c)


def count_bounded_submasks(members: Iterable[int], max_size: int) -> int:
    """Upper bound on the candidate stream length (sum over members, with repeats)."""
    from math import comb
    total = 0
    for m in members:
        k = popcount(m)
        total += sum(comb(k, i) for i in range(min(k, max_size) + 1))
    return total


class ContainmentIndex:
    """Per-symbol bitsets over a member list, for fast container queries."""

    def __init__(self, members: Sequence[int], nbits: int):
        self.members = list(members)
        self.columns = [0] * nbits
        for idx, m in enumerate(self.members):
            for b in iter_bits(m):
                self.columns[b] |= 1 << idx
        self.all = (1 << len(self.members)) - 1

    def containers(self, c: int) -> int:
        out = self.all
        for b in iter_bits(c):
            out &= self.columns[b]
            if not out:
                break
        return out

    def container_masks(self, c: int) -> list[int]:
        return [self.members[i] for i in iter_bits(self.containers(c))]


def random_subset(rng: random.Random, mask: int, size: int) -> int:
    bits = list(iter_bits(mask))
    out = 0
    for b in rng.sample(bits, size):
        out |= 1 << b
    return out


def all_subsets_of_size(mask: int, size: int) -> Iterator[int]:
    bits = list(iter_bits(mask))
    for combo in combinations(bits, size):
        out = 0
        for b in combo:
            out |= 1 << b
        yield out
