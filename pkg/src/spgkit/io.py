"""Deterministic JSON I/O for families, graphs, incidences and run manifests."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .core import LayerFamily, SubsetPartitionGraph, SymbolUniverse
from .errors import InvalidFamilyError
from .polytope import PolytopeIncidence

TOOL = "spgkit"


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def write_json(path: str | Path, obj) -> str:
    """Write ``obj`` canonically and return the sha256 of the bytes written."""
    text = dumps(obj)
    p = Path(path)
    if p.parent != Path(""):
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)
    return sha256_text(text)


def read_json(path: str | Path):
    return json.loads(Path(path).read_text())


def graph_to_json(G: SubsetPartitionGraph) -> dict:
    u = G.universe
    return {
        "universe": u.to_json(),
        "d": G.d,
        "vertices": [[u.serialize_mask(m) for m in v] for v in G.vertices],
        "edges": [list(e) for e in G.edges],
    }


def graph_from_json(data: dict) -> SubsetPartitionGraph:
    u = SymbolUniverse.from_json(data["universe"])
    return SubsetPartitionGraph.build(u, int(data["d"]), data["vertices"],
                                      [tuple(e) for e in data["edges"]])


def structure_to_json(G) -> dict:
    if isinstance(G, LayerFamily):
        return G.to_json()
    if isinstance(G, SubsetPartitionGraph):
        return graph_to_json(G)
    if isinstance(G, PolytopeIncidence):
        return G.to_json()
    raise TypeError(f"cannot serialize {type(G).__name__}")


def load_structure(data: dict):
    """A layer family, a graph, or a polytope incidence, recognized by its keys."""
    try:
        if "layers" in data:
            return LayerFamily.from_json(data)
        if "edges" in data and "universe" in data:
            return graph_from_json(data)
        if {"n", "d", "vertices"} <= set(data):
            return PolytopeIncidence.from_json(data)
    except (KeyError, TypeError) as exc:
        raise InvalidFamilyError(f"malformed structure JSON: {exc}") from exc
    raise InvalidFamilyError("unrecognized structure JSON")


@dataclass
class RunManifest:
    command: str
    config: dict
    outputs: dict = field(default_factory=dict)
    waived: list = field(default_factory=list)
    version: str = __version__

    def to_json(self) -> dict:
        return {"tool": TOOL, "version": self.version, "command": self.command,
                "config": self.config, "outputs": self.outputs, "waived": self.waived}

    @classmethod
    def from_json(cls, data: dict) -> "RunManifest":
        return cls(data["command"], data["config"], data.get("outputs", {}),
                   data.get("waived", []), data.get("version", __version__))
