"""Subset partition graphs from simple polytopes, and the graph transforms on them."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

from .core import (
    LayerFamily,
    SubsetPartitionGraph,
    SymbolUniverse,
    bfs_distances,
    eccentricities,
    mask_key,
    popcount,
    ridges,
)
from .errors import DiameterUndefinedError, InvalidEditError, InvalidIncidenceError


@dataclass(frozen=True)
class PolytopeIncidence:
    """Vertex-facet incidence of a simple d-polytope; facets are numbered 1..n."""

    n: int
    d: int
    vertices: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        verts = tuple(tuple(sorted(v)) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if self.d < 1 or self.n < self.d:
            raise InvalidIncidenceError(f"need 1 <= d <= n, got d={self.d}, n={self.n}")
        if not verts:
            raise InvalidIncidenceError("no vertices")
        for i, v in enumerate(verts):
            if len(set(v)) != self.d:
                raise InvalidIncidenceError(f"vertex {i} lies on {len(set(v))} facets, expected {self.d}")
            if v[0] < 1 or v[-1] > self.n:
                raise InvalidIncidenceError(f"vertex {i} names a facet outside 1..{self.n}")
        masks = self.masks
        if len(set(masks)) != len(masks):
            raise InvalidIncidenceError("two vertices have the same facet set")
        counts: dict[int, int] = {}
        for m in masks:
            for r in ridges(m):
                counts[r] = counts.get(r, 0) + 1
                if counts[r] > 2:
                    raise InvalidIncidenceError("a (d-1)-set of facets lies on more than two vertices")
        adj = _adjacency(masks, self.d)
        if len(bfs_distances(adj, 0)) != len(masks):
            raise InvalidIncidenceError("vertex-edge graph is disconnected")

    @property
    def masks(self) -> list[int]:
        return [sum(1 << (f - 1) for f in v) for v in self.vertices]

    @property
    def edges(self) -> list[tuple[int, int]]:
        ms = self.masks
        return [(a, b) for a, b in combinations(range(len(ms)), 2)
                if popcount(ms[a] & ms[b]) == self.d - 1]

    def to_json(self) -> dict:
        return {"n": self.n, "d": self.d, "vertices": [list(v) for v in self.vertices]}

    @classmethod
    def from_json(cls, data: dict) -> "PolytopeIncidence":
        try:
            return cls(int(data["n"]), int(data["d"]), tuple(tuple(int(x) for x in v) for v in data["vertices"]))
        except (KeyError, TypeError) as exc:
            raise InvalidIncidenceError(f"malformed incidence JSON: {exc}") from exc


def _adjacency(masks: list[int], d: int) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in masks]
    for a, b in combinations(range(len(masks)), 2):
        if popcount(masks[a] & masks[b]) == d - 1:
            adj[a].add(b)
            adj[b].add(a)
    return adj


def cube(dim: int) -> PolytopeIncidence:
    """The dim-cube: facets 2i-1, 2i are opposite, each vertex picks one of every pair."""
    verts = tuple(tuple(2 * i + 1 + c for i, c in enumerate(choice))
                  for choice in product((0, 1), repeat=dim))
    return PolytopeIncidence(2 * dim, dim, verts)


def simplex(d: int) -> PolytopeIncidence:
    return PolytopeIncidence(d + 1, d, tuple(combinations(range(1, d + 2), d)))


def spg_from_incidence(P: PolytopeIncidence) -> SubsetPartitionGraph:
    return SubsetPartitionGraph(SymbolUniverse.plain(P.n), P.d,
                                tuple((m,) for m in P.masks), tuple(P.edges))


def _as_graph(G) -> SubsetPartitionGraph:
    return G.as_graph() if isinstance(G, LayerFamily) else G


def layered_spg(G, u: int) -> LayerFamily:
    """Layers are the distance classes from vertex ``u``."""
    g = _as_graph(G)
    if not 0 <= u < len(g.vertices):
        raise InvalidEditError(f"vertex {u} does not exist")
    dist = bfs_distances(g.adjacency, u)
    if len(dist) != len(g.vertices):
        raise DiameterUndefinedError("graph is disconnected")
    layers: list[list[int]] = [[] for _ in range(max(dist.values()) + 1)]
    for v, k in dist.items():
        layers[k].extend(g.vertices[v])
    return LayerFamily(g.universe, g.d, tuple(tuple(l) for l in layers))


def _vertex_key(v: tuple[int, ...]) -> tuple:
    return tuple(mask_key(m) for m in v)


def eccentric_vertex(G) -> int:
    """The vertex of maximal eccentricity with the least canonical set collection."""
    g = _as_graph(G)
    ecc = eccentricities(g)
    top = max(ecc)
    return min((i for i, e in enumerate(ecc) if e == top), key=lambda i: _vertex_key(g.vertices[i]))


def to_path(G) -> LayerFamily:
    return layered_spg(G, eccentric_vertex(G))


def to_singletons(G) -> SubsetPartitionGraph:
    """Blow every vertex up into a clique of singleton vertices, wiring neighbours completely."""
    g = _as_graph(G)
    if not g.edges and len(g.vertices) == 1:
        raise DiameterUndefinedError("an edgeless single-vertex graph has no singleton form")
    ids: list[list[int]] = []
    verts: list[tuple[int]] = []
    for v in g.vertices:
        ids.append(list(range(len(verts), len(verts) + len(v))))
        verts.extend((m,) for m in v)
    edges = [e for group in ids for e in combinations(group, 2)]
    for a, b in g.edges:
        edges += [(x, y) for x in ids[a] for y in ids[b]]
    return SubsetPartitionGraph(g.universe, g.d, tuple(verts), tuple(edges))


def add_edge(G, v: int, w: int) -> SubsetPartitionGraph:
    g = _as_graph(G)
    t = len(g.vertices)
    if v == w:
        raise InvalidEditError("self-loops are not allowed")
    if not (0 <= v < t and 0 <= w < t):
        raise InvalidEditError("edge endpoints must be existing vertices")
    if w in g.adjacency[v]:
        raise InvalidEditError(f"vertices {v} and {w} are already adjacent")
    return SubsetPartitionGraph(g.universe, g.d, g.vertices, g.edges + ((v, w),))


def contract_edge(G, e: tuple[int, int]) -> SubsetPartitionGraph:
    """Merge the endpoints of ``e`` into one vertex holding both collections."""
    g = _as_graph(G)
    v, w = sorted(e)
    if v == w or (v, w) not in set(g.edges):
        raise InvalidEditError(f"{e} is not an edge")

    def remap(x: int) -> int:
        if x == w:
            return v
        return x - 1 if x > w else x

    verts = [tuple(vs) for i, vs in enumerate(g.vertices) if i != w]
    verts[v] = g.vertices[v] + g.vertices[w]
    edges = {tuple(sorted((remap(a), remap(b)))) for a, b in g.edges}
    edges = tuple(sorted((a, b) for a, b in edges if a != b))
    return SubsetPartitionGraph(g.universe, g.d, tuple(verts), edges)


def to_dot(G, name: str = "G") -> str:
    g = _as_graph(G)
    lines = [f"graph {name} {{"]
    for i, v in enumerate(g.vertices):
        label = " | ".join(",".join(str(s) for s in g.universe.serialize_mask(m)) for m in v)
        lines.append(f'  {i} [label="{label}"];')
    for a, b in g.edges:
        lines.append(f"  {a} -- {b};")
    lines.append("}")
    return "\n".join(lines) + "\n"
