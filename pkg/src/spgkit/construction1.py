"""The doubled sublinear pipeline: merge, double, interpolate, remove resemblers."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from itertools import combinations

from .core import (
    ContainmentIndex,
    LayerFamily,
    SymbolUniverse,
    diameter,
    double_mask,
    hirsch_ratio,
    iter_bits,
    make_doubled,
    popcount,
    project_mask,
)
from .covering import DEFAULT_RESTARTS, DEFAULT_SET_BUDGET, build_disjoint_covering_designs
from .errors import (
    ConstructionFailure,
    DegenerateLayerError,
    DomainError,
    SeparationInfeasibleError,
    TooFewLayersError,
)
from .properties import (
    check_adjacency,
    check_dimension_reduction,
    check_endpoint_count,
    check_strong_adjacency,
    check_width_covering,
)
from .random_sets import SeparationSpec, random_subset_mask, separation_violations

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Pipeline1Config:
    n: int
    d: int
    m: int = 3
    seed: int = 0
    strict: bool = False
    separation_bound: int | None = None
    retry_budget: int = 2000
    covering_restarts: int = DEFAULT_RESTARTS
    set_budget: int = DEFAULT_SET_BUDGET
    check_budget: int = 5_000_000

    def __post_init__(self) -> None:
        if self.m < 3:
            raise DomainError("width-covering needs m >= 3")
        if not 2 <= self.d < self.n:
            raise DomainError("need 2 <= d < n")
        if self.retry_budget < 1:
            raise DomainError("retry budget must be positive")

    @property
    def bound(self) -> int:
        return self.d - 4 if self.separation_bound is None else self.separation_bound

    def to_json(self) -> dict:
        return {
            "n": self.n, "d": self.d, "m": self.m, "seed": self.seed,
            "mode": "strict" if self.strict else "relaxed",
            "separation_bound": self.bound, "retry_budget": self.retry_budget,
            "covering_restarts": self.covering_restarts, "set_budget": self.set_budget,
        }


@dataclass(frozen=True)
class Interp1Record:
    """One interpolation set; base-symbol masks except ``I`` (doubled)."""

    k: int
    P: int
    f: int
    g: int

    @property
    def F(self) -> int:
        return self.P | 1 << self.f

    @property
    def G(self) -> int:
        return self.P | 1 << self.g

    @property
    def U(self) -> int:
        return self.P | 1 << self.f | 1 << self.g

    @property
    def I(self) -> int:
        return make_doubled(self.F, self.G)

    def resemblers(self) -> dict[int, int]:
        """Map a (bit of P) -> doubled mask of the resembler R^a."""
        return {a: double_mask((self.P & ~(1 << a)) | 1 << self.f | 1 << self.g)
                for a in iter_bits(self.P)}

    def to_json(self, base: SymbolUniverse) -> dict:
        s = base.serialize_mask
        return {
            "k": self.k, "P": s(self.P), "f": self.f + 1, "g": self.g + 1,
            "F": s(self.F), "G": s(self.G), "U": s(self.U),
            "I": base.doubled().serialize_mask(self.I),
        }


def merge_layers(V: LayerFamily, m: int) -> LayerFamily:
    """Merge consecutive groups of m layers; the final group absorbs the remainder."""
    if m < 1:
        raise DomainError("m must be at least 1")
    ell = len(V.layers)
    if ell < m:
        raise TooFewLayersError(f"{ell} layers cannot be merged in groups of {m}")
    delta = ell // m
    out = []
    for i in range(delta):
        stop = (i + 1) * m if i < delta - 1 else ell
        out.append(tuple(s for layer in V.layers[i * m:stop] for s in layer))
    return LayerFamily(V.universe, V.d, tuple(out))


def double_family(W: LayerFamily) -> LayerFamily:
    """Apply D to every member, keeping layers and sections."""
    u = W.universe.doubled()
    return LayerFamily(u, 2 * W.d, tuple(tuple(double_mask(s) for s in layer) for layer in W.layers),
                       W.sections)


def _containers(layer: tuple[int, ...], c: int) -> list[int]:
    return [e for e in layer if c & ~e == 0]


def choose_interpolations(W: LayerFamily, X: LayerFamily, config: Pipeline1Config):
    """Add one interpolation set to every layer but the last.

    Returns ``(Y, records, separation_log)`` where the log lists the violated
    separation constraints of the accepted attempt (empty when clean).
    """
    delta = len(W.layers)
    if delta < 2:
        raise TooFewLayersError("interpolation needs at least two merged layers")
    n, d = W.universe.n, W.d
    spec = SeparationSpec("doubled_P", max_intersection=config.bound, budget=config.retry_budget)
    # the U-sets must also pairwise meet in at most d-2 symbols
    u_spec = SeparationSpec("doubled_P", max_intersection=d - 2, budget=config.retry_budget,
                            distinct=False)
    bits = list(range(n))
    rng = random.Random(f"c1:{config.seed}")
    best = None
    for attempt in range(config.retry_budget):
        Ps = [random_subset_mask(rng, bits, d - 1) for _ in range(delta - 1)]
        records = []
        for k, P in enumerate(Ps, start=1):
            Gs = _containers(W.layers[k], P)
            if not Gs:
                raise ConstructionFailure(f"layer {k + 1} of W does not cover a {d - 1}-set")
            G = rng.choice(Gs)
            g = (G & ~P).bit_length() - 1
            fs = [(F & ~P).bit_length() - 1 for F in _containers(W.layers[k - 1], P)]
            fs = [f for f in fs if not G >> f & 1]
            if not fs:
                raise ConstructionFailure(f"no admissible f for layer {k}")
            records.append(Interp1Record(k, P, rng.choice(fs), g))
        labels = [r.k for r in records]
        log_ = separation_violations(Ps, spec, labels)
        log_ += [dict(v, constraint="U_intersection")
                 for v in separation_violations([r.U for r in records], u_spec, labels)]
        if not log_:
            best = (records, log_)
            break
        if best is None or len(log_) < len(best[1]):
            best = (records, log_)
        if config.strict and attempt == config.retry_budget - 1:
            raise SeparationInfeasibleError(
                f"strict separation failed after {config.retry_budget} attempts: "
                f"{log_[0]['constraint']} (requires d and n-d sufficiently large)", log_[0])
    records, sep_log = best
    if config.strict and sep_log:
        raise SeparationInfeasibleError("strict separation failed", sep_log[0])
    layers = [list(layer) for layer in X.layers]
    for r in records:
        I = r.I
        assert popcount(project_mask(I)) == d + 1
        layers[r.k - 1].append(I)
    Y = LayerFamily(X.universe, X.d, tuple(tuple(l) for l in layers))
    return Y, records, sep_log


def resembler_removal(Y: LayerFamily, records: list[Interp1Record]):
    """Remove every present R_k^a from Y. Returns ``(Z, removed)``."""
    where = Y.layer_of
    gone: set[int] = set()
    removed = []
    for r in records:
        for a, R in r.resemblers().items():
            if R in where and R not in gone:
                gone.add(R)
                removed.append({"k": r.k, "a": a + 1, "layer": where[R], "set": R})
    layers = []
    for i, layer in enumerate(Y.layers, start=1):
        kept = tuple(s for s in layer if s not in gone)
        if not kept:
            raise DegenerateLayerError(f"removal emptied layer {i}")
        layers.append(kept)
    return LayerFamily(Y.universe, Y.d, tuple(layers)), removed


@dataclass
class Pipeline1Result:
    config: Pipeline1Config
    V: LayerFamily
    W: LayerFamily
    X: LayerFamily
    Y: LayerFamily
    Z: LayerFamily
    records: list[Interp1Record]
    removed: list[dict]
    separation_log: list[dict]
    reports: dict = field(default_factory=dict)

    @property
    def clean(self) -> bool:
        return not self.separation_log

    @property
    def waived(self) -> list[str]:
        return ["separation"] if self.separation_log else []

    def stats(self) -> dict:
        return {
            "V_layers": len(self.V.layers),
            "W_layers": len(self.W.layers),
            "delta_W_plus_1": diameter(self.W) + 1,
            "floor_ell_over_m": len(self.V.layers) // self.config.m,
            "Z_layers": len(self.Z.layers),
            "Z_sets": len(self.Z.members()),
            "diameter": diameter(self.Z),
            "hirsch_ratio": str(hirsch_ratio(self.Z)),
            "interpolation_sets": len(self.records),
            "removed": len(self.removed),
        }

    def report_json(self) -> dict:
        base = self.V.universe
        return {
            "pipeline": "c1",
            "config": self.config.to_json(),
            "stats": self.stats(),
            "separation_log": self.separation_log,
            "clean": self.clean,
            "waived": self.waived,
            "records": [r.to_json(base) for r in self.records],
            "removed": [dict(x, set=self.Z.universe.serialize_mask(x["set"])) for x in self.removed],
            "reports": {k: v.to_json() for k, v in self.reports.items()},
        }


def verify_pipeline1(Z: LayerFamily, budget: int = 5_000_000) -> dict:
    return {
        "dimension_reduction": check_dimension_reduction(Z, budget=budget),
        "adjacency": check_adjacency(Z),
        "strong_adjacency": check_strong_adjacency(Z),
        "endpoint_count": check_endpoint_count(Z),
        "width_covering": check_width_covering(Z, budget=budget),
    }


def pipeline1(config: Pipeline1Config, verify: bool = True) -> Pipeline1Result:
    base = SymbolUniverse.plain(config.n)
    fam = build_disjoint_covering_designs(config.n, config.d, config.seed,
                                          restarts=config.covering_restarts, budget=config.set_budget)
    V = fam.to_layer_family(base)
    W = merge_layers(V, config.m)
    X = double_family(W)
    Y, records, sep_log = choose_interpolations(W, X, config)
    Z, removed = resembler_removal(Y, records)
    result = Pipeline1Result(config, V, W, X, Y, Z, records, removed, sep_log)
    if sep_log:
        log.info("separation violations: %d", len(sep_log))
    if verify:
        result.reports = verify_pipeline1(Z, config.check_budget)
    return result


# sampled invariants ----------------------------------------------------------

def sample_doubled_sets(Z: LayerFamily, samples: int, seed: int,
                        focus: list[int] | None = None) -> list[int]:
    """Random doubled sets: subsets of members plus up to two noise cells.

    Half of the base members are drawn from ``focus`` (e.g. the interpolation
    sets) when given, so that the rare wide classes are exercised.
    """
    rng = random.Random(seed)
    members = Z.members()
    cells = list(range(Z.universe.size))
    out = []
    for _ in range(samples):
        pool = focus if focus and rng.random() < 0.5 else members
        bits = list(iter_bits(rng.choice(pool)))
        s = 0
        for b in rng.sample(bits, rng.randint(1, len(bits))):
            s |= 1 << b
        for b in rng.sample(cells, rng.choice((0, 0, 1, 2))):
            s |= 1 << b
        out.append(s)
    return out


def width_classification_violations(Z: LayerFamily, interpolation: set[int],
                                    samples: list[int]) -> list[dict]:
    """Check the container bounds by width class for each sampled set."""
    half = Z.d // 2
    index = ContainmentIndex(Z.members(), Z.universe.size)
    bad = []
    for s in samples:
        w = popcount(project_mask(s))
        cont = index.container_masks(s)
        n_int = sum(1 for c in cont if c in interpolation)
        n_corr = len(cont) - n_int
        ok = True
        if w >= half + 2:
            ok = not cont
        elif w == half + 1:
            ok = n_corr == 0 and n_int <= 1
        elif w == half:
            ok = n_corr <= 1 and n_int <= 1
        if not ok:
            bad.append({"S": Z.universe.serialize_mask(s), "width": w,
                        "correspondence": n_corr, "interpolation": n_int})
    return bad


def adjacent_layer_violations(Z: LayerFamily, samples: list[int]) -> list[dict]:
    """Width-d sets with two containers must have them in the same or adjacent layers."""
    half = Z.d // 2
    index = ContainmentIndex(Z.members(), Z.universe.size)
    where = Z.layer_of
    bad = []
    for s in samples:
        if popcount(project_mask(s)) != half:
            continue
        cont = index.container_masks(s)
        if len(cont) > 2:
            bad.append({"S": Z.universe.serialize_mask(s), "containers": len(cont)})
        elif len(cont) == 2:
            a, b = (where[c] for c in cont)
            if abs(a - b) > 1:
                bad.append({"S": Z.universe.serialize_mask(s), "layers": sorted([a, b])})
    return bad


def u_intersections(records: list[Interp1Record]) -> list[int]:
    return [popcount(a.U & b.U) for a, b in combinations(records, 2)]
