"""Disjoint (n, d, d-1)-covering designs and the layer-count bounds."""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass
from itertools import combinations

from .core import LayerFamily, SymbolUniverse, mask_key, ridges
from .errors import BudgetExceededError, ConstructionFailure, DomainError

log = logging.getLogger(__name__)

DEFAULT_SET_BUDGET = 250_000
DEFAULT_RESTARTS = 8


def lambda_lower_bound(n: int, d: int) -> int:
    """floor((n - d + 1) / ln n)."""
    if n < 2:
        raise DomainError("need n >= 2")
    if not 1 <= d <= n:
        raise DomainError(f"need 1 <= d <= n, got d={d}, n={n}")
    return math.floor((n - d + 1) / math.log(n))


def mesh_lower_bound(q: int, r: int) -> int:
    """floor((q - r) / (3 ln q)), the weaker bound on the layer count for (q, r+1)."""
    if q < 2:
        raise DomainError("need q >= 2")
    if not 0 <= r < q:
        raise DomainError(f"need 0 <= r < q, got r={r}, q={q}")
    return math.floor((q - r) / (3 * math.log(q)))


@dataclass(frozen=True)
class CoveringDesignFamily:
    n: int
    d: int
    layers: tuple[tuple[int, ...], ...]
    leftover_merged: bool
    seed: int = 0
    restarts: int = DEFAULT_RESTARTS

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def to_layer_family(self, universe: SymbolUniverse | None = None) -> LayerFamily:
        return LayerFamily(universe or SymbolUniverse.plain(self.n), self.d, self.layers)

    def report(self) -> dict:
        bound = lambda_lower_bound(self.n, self.d) if self.n >= 2 else 0
        return {
            "n": self.n,
            "d": self.d,
            "seed": self.seed,
            "layers": self.num_layers,
            "lambda_lower_bound": bound,
            "meets_bound": self.num_layers >= bound,
            "shortfall": max(0, bound - self.num_layers),
            "leftover_merged": self.leftover_merged,
        }


def _extract_all(sets: list[int], rng: random.Random | None) -> tuple[list[list[int]], list[int]]:
    """Greedily peel covering designs off ``sets`` until some ridge has no container left."""
    ridges_of = {s: ridges(s) for s in sets}
    avail: dict[int, int] = {}
    for s in sets:
        for r in ridges_of[s]:
            avail[r] = avail.get(r, 0) + 1
    tie = {s: (rng.random() if rng else 0.0) for s in sets}
    remaining = set(sets)
    layers: list[list[int]] = []
    while remaining and min(avail.values()) > 0:
        # prefer sets whose scarcest ridge is least scarce, to save rare ridges for later layers
        order = sorted(remaining, key=lambda s: (-min(avail[r] for r in ridges_of[s]),
                                                 tie[s], mask_key(s)))
        covered: set[int] = set()
        chosen: list[int] = []
        taken: set[int] = set()
        d = len(ridges_of[order[0]])
        # exact greedy set cover: gains only shrink, so one pass per gain level suffices
        for level in range(d, 0, -1):
            for s in order:
                if s in taken:
                    continue
                gain = sum(1 for r in ridges_of[s] if r not in covered)
                if gain == level:
                    chosen.append(s)
                    taken.add(s)
                    covered.update(ridges_of[s])
        layers.append(chosen)
        for s in chosen:
            for r in ridges_of[s]:
                avail[r] -= 1
        remaining -= taken
    return layers, sorted(remaining, key=mask_key)


def build_disjoint_covering_designs(n: int, d: int, seed: int = 0,
                                    restarts: int = DEFAULT_RESTARTS,
                                    budget: int = DEFAULT_SET_BUDGET,
                                    symbols: list[int] | None = None) -> CoveringDesignFamily:
    """Partition the d-subsets of an n-set into (n, d, d-1)-covering designs.

    Restart 0 uses canonical tie-breaking; later restarts shuffle ties with a
    generator derived from ``seed``.  The best restart (most layers, earliest
    on ties) is kept.  ``symbols`` maps local positions to bit indices of a
    larger universe (default: bits 0..n-1).
    """
    if not 1 <= d <= n:
        raise DomainError(f"need 1 <= d <= n, got d={d}, n={n}")
    total = math.comb(n, d)
    if total > budget:
        raise BudgetExceededError(f"C({n},{d}) = {total} exceeds set budget {budget}")
    bits = symbols if symbols is not None else list(range(n))
    if len(bits) != n:
        raise DomainError("symbol map must have length n")
    sets = [sum(1 << bits[i] for i in c) for c in combinations(range(n), d)]
    best = None
    for r in range(max(1, restarts)):
        rng = None if r == 0 else random.Random(f"covering:{seed}:{r}")
        layers, rest = _extract_all(sets, rng)
        if best is None or len(layers) > len(best[0]):
            best = (layers, rest)
    layers, rest = best
    if not layers:
        raise ConstructionFailure(f"no covering design could be formed for n={n}, d={d}")
    if rest:
        layers[-1] = layers[-1] + rest
    log.debug("covering designs n=%d d=%d seed=%d: %d layers", n, d, seed, len(layers))
    return CoveringDesignFamily(n, d, tuple(tuple(sorted(l, key=mask_key)) for l in layers),
                                bool(rest), seed, restarts)
