"""The sectioned superlinear pipeline over bipartite symbols A and B."""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .construction1 import double_family, merge_layers
from .core import (
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
from .covering import (
    DEFAULT_RESTARTS,
    DEFAULT_SET_BUDGET,
    build_disjoint_covering_designs,
    mesh_lower_bound,
)
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
)
from .random_sets import SeparationSpec, random_subset_mask, separation_violations

log = logging.getLogger(__name__)

MODES = ("desk", "strict", "theorem")
THEOREM_M = 13
THEOREM_EPS = Fraction(1, 4)


def _fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


def section_bounds(d: int, eps) -> tuple[int, int]:
    """(ceil(eps d), floor((1 - eps) d))."""
    e = _fraction(eps)
    if not 0 < e < Fraction(1, 2):
        raise DomainError(f"epsilon must lie strictly between 0 and 1/2, got {eps}")
    return math.ceil(e * d), math.floor((1 - e) * d)


@dataclass(frozen=True)
class SectionedConfig:
    n: int
    m: int = 1
    epsilon: Fraction = THEOREM_EPS
    seed: int = 0
    mode: str = "desk"
    min_difference: int = 5
    four_union: int | None = None
    retry_budget: int = 2000
    full_range: bool = False
    covering_restarts: int = DEFAULT_RESTARTS
    set_budget: int = DEFAULT_SET_BUDGET
    check_budget: int = 5_000_000

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilon", _fraction(self.epsilon))
        if self.n <= 0 or self.n % 4:
            raise DomainError(f"n must be a positive multiple of 4, got {self.n}")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}")
        if self.m < 1:
            raise DomainError("m must be at least 1")
        if self.mode == "theorem":
            if self.m < THEOREM_M:
                raise DomainError(f"theorem mode needs m >= {THEOREM_M}")
            if self.epsilon != THEOREM_EPS:
                raise DomainError("theorem mode needs epsilon = 1/4")
        jl, jr = section_bounds(self.d, self.epsilon)
        if jl > jr or jl < 1 or jr > self.d - 1:
            raise DomainError(f"empty section range for d={self.d}: ({jl}, {jr})")
        if self.retry_budget < 1:
            raise DomainError("retry budget must be positive")

    @property
    def d(self) -> int:
        return self.n // 4

    @property
    def half(self) -> int:
        return self.n // 2

    @property
    def bounds(self) -> tuple[int, int]:
        return section_bounds(self.d, self.epsilon)

    @property
    def build_range(self) -> tuple[int, int]:
        return (1, self.d - 1) if self.full_range else self.bounds

    @property
    def union_bound(self) -> int:
        return math.ceil(Fraction(13 * self.d, 16)) if self.four_union is None else self.four_union

    @property
    def enforce(self) -> bool:
        return self.mode in ("strict", "theorem")

    def separation_spec(self) -> SeparationSpec:
        return SeparationSpec("sectioned_PQ", min_difference=self.min_difference,
                              min_four_union=self.union_bound, budget=self.retry_budget)

    def waived(self, separation_clean: bool) -> list[str]:
        out = []
        if self.m < THEOREM_M:
            out.append(f"m >= {THEOREM_M}")
        if self.epsilon != THEOREM_EPS:
            out.append("epsilon = 1/4")
        if not separation_clean:
            out.append("separation thresholds")
        if self.min_difference < 5 or self.union_bound < math.ceil(Fraction(13 * self.d, 16)):
            out.append("separation thresholds lowered")
        # the counting arguments close only once 13d/16 - 8 > 3d/4
        if self.d <= 128:
            out.append("d sufficiently large")
        return out

    def to_json(self) -> dict:
        jl, jr = self.bounds
        return {
            "n": self.n, "d": self.d, "m": self.m, "epsilon": str(self.epsilon),
            "seed": self.seed, "mode": self.mode, "jl": jl, "jr": jr,
            "full_range": self.full_range, "min_difference": self.min_difference,
            "four_union": self.union_bound, "retry_budget": self.retry_budget,
            "covering_restarts": self.covering_restarts, "set_budget": self.set_budget,
        }


@dataclass(frozen=True)
class Interp2Record:
    """One interpolation set of the sectioned family (masks over the base universe).

    ``x`` is g (mid variant, an A symbol) or h (end variant, a B symbol).
    """

    j: int
    k: int
    variant: str
    P: int
    Q: int
    f: int
    x: int

    @property
    def is_mid(self) -> bool:
        return self.variant == "mid"

    @property
    def F(self) -> int:
        return self.P | 1 << self.f

    @property
    def G(self) -> int:
        if not self.is_mid:
            raise AttributeError("end records have no G")
        return self.P | 1 << self.x

    @property
    def H(self) -> int:
        if self.is_mid:
            raise AttributeError("mid records have no H")
        return self.Q | 1 << self.x

    @property
    def U(self) -> int:
        return self.P | 1 << self.f | (1 << self.x if self.is_mid else 0)

    @property
    def I(self) -> int:
        return make_doubled(self.P | self.Q | 1 << self.f, self.P | self.Q | 1 << self.x)

    @property
    def linking_set(self) -> int:
        """The correspondence set in the next layer this record links to."""
        return double_mask(self.P | self.Q | 1 << self.x)

    @property
    def source_set(self) -> int:
        return double_mask(self.P | self.Q | 1 << self.f)

    def resemblers(self) -> list[tuple[str, int, int]]:
        """(type, element bit, doubled mask) for every resembler of this record."""
        fx = 1 << self.f | 1 << self.x
        out = [("a", a, double_mask((self.P & ~(1 << a)) | fx | self.Q)) for a in iter_bits(self.P)]
        if not self.is_mid:
            out += [("b", b, double_mask(self.P | fx | (self.Q & ~(1 << b))))
                    for b in iter_bits(self.Q)]
        return out

    def to_json(self, base: SymbolUniverse) -> dict:
        s = base.serialize_mask
        out = {"j": self.j, "k": self.k, "variant": self.variant, "P": s(self.P), "Q": s(self.Q),
               "f": base.serialize_symbol(self.f), "U": s(self.U),
               "I": base.doubled().serialize_mask(self.I)}
        key = "g" if self.is_mid else "h"
        out[key] = base.serialize_symbol(self.x)
        return out


@dataclass
class SectionStats:
    j: int
    a_layers: int
    b_layers: int
    ell: int
    lower_bound: int
    delta: int | None = None

    def to_json(self) -> dict:
        return {"j": self.j, "a_layers": self.a_layers, "b_layers": self.b_layers,
                "ell": self.ell, "min_identity": self.ell == min(self.a_layers, self.b_layers),
                "lower_bound": self.lower_bound, "meets_lower_bound": self.ell >= self.lower_bound,
                "delta": self.delta}


# V: stacked meshes -----------------------------------------------------------

def _fold(layers: list[tuple[int, ...]], ell: int) -> list[tuple[int, ...]]:
    """Keep ``ell`` layers, merging the excess into the last kept one."""
    if len(layers) == ell:
        return list(layers)
    tail = tuple(s for layer in layers[ell - 1:] for s in layer)
    return list(layers[:ell - 1]) + [tail]


def mesh_layers(a_layers: list[tuple[int, ...]], b_layers: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Cyclic Latin pairing: layer k is the union over i of A_i x B_{i+k mod l}."""
    ell = min(len(a_layers), len(b_layers))
    A, B = _fold(a_layers, ell), _fold(b_layers, ell)
    out = []
    for k in range(ell):
        out.append(tuple(x | y for i in range(ell) for x in A[i] for y in B[(i + k) % ell]))
    return out


def build_sectioned_family(config: SectionedConfig) -> tuple[LayerFamily, list[SectionStats]]:
    half, d = config.half, config.d
    universe = SymbolUniverse.bipartite(half, half)
    cache: dict[int, tuple[tuple[int, ...], ...]] = {}

    def side(size: int) -> tuple[tuple[int, ...], ...]:
        if size not in cache:
            fam = build_disjoint_covering_designs(half, size, config.seed,
                                                  restarts=config.covering_restarts,
                                                  budget=config.set_budget)
            cache[size] = fam.layers
        return cache[size]

    lo, hi = config.build_range
    layers: list[tuple[int, ...]] = []
    sections: list[int] = []
    stats = []
    for j in range(lo, hi + 1):
        a = list(side(d - j))
        b = [tuple(s << half for s in layer) for layer in side(j)]
        mesh = mesh_layers(a, b)
        bound = min(mesh_lower_bound(half, d - j - 1), mesh_lower_bound(half, j - 1))
        stats.append(SectionStats(j, len(a), len(b), len(mesh), bound))
        layers += mesh
        sections += [j] * len(mesh)
    return LayerFamily(universe, d, tuple(layers), tuple(sections)), stats


def merge_within_sections(V: LayerFamily, m: int, keep: tuple[int, int] | None = None) -> LayerFamily:
    """Merge groups of m layers inside each section, keeping sections in ``keep``."""
    if V.sections is None:
        raise DomainError("merge_within_sections needs a sectioned family")
    lo, hi = keep if keep is not None else (min(V.sections), max(V.sections))
    layers: list[tuple[int, ...]] = []
    sections: list[int] = []
    for j in V.section_numbers():
        if not lo <= j <= hi:
            continue
        idx = V.section_indices(j)
        if len(idx) < m:
            raise TooFewLayersError(f"section {j} has {len(idx)} layers, fewer than m={m}", section=j)
        part = LayerFamily(V.universe, V.d, tuple(V.layers[i - 1] for i in idx))
        merged = merge_layers(part, m)
        layers += merged.layers
        sections += [j] * len(merged.layers)
    if not layers:
        raise TooFewLayersError("no section survives the section range")
    return LayerFamily(V.universe, V.d, tuple(layers), tuple(sections))


# Y: interpolation sets --------------------------------------------------------

def _slots(W: LayerFamily, jr: int) -> list[tuple[int, int, str, int]]:
    """(j, k, variant, global layer index) for every interpolation set to add."""
    out = []
    for j in W.section_numbers():
        idx = W.section_indices(j)
        for k, g in enumerate(idx, start=1):
            if k < len(idx):
                out.append((j, k, "mid", g))
            elif j < jr:
                out.append((j, k, "end", g))
    return out


def _strict_preflight(config: SectionedConfig) -> None:
    """Fail fast when the separation constraints cannot hold even for the unavoidable records."""
    jl, jr = config.bounds
    js = list(range(jl, jr))
    if len(js) < 2:
        return
    d = config.d
    spec = config.separation_spec()
    for label, sizes in (("P", [d - j - 1 for j in js]), ("Q", js)):
        small = [s for s in sizes if s < config.min_difference]
        if small:
            c = {"constraint": "pairwise_difference", "family": label, "value": min(small),
                 "bound": config.min_difference}
            raise SeparationInfeasibleError(
                f"{label}-sets of size {min(small)} cannot differ pairwise in "
                f"{config.min_difference} elements (needs d sufficiently large)", c)
        if len(sizes) >= 4 and sum(sorted(sizes)[-4:]) < config.union_bound:
            c = {"constraint": "four_union", "family": label, "value": sum(sorted(sizes)[-4:]),
                 "bound": config.union_bound}
            raise SeparationInfeasibleError(
                f"four {label}-sets cannot reach a union of {config.union_bound}", c)
    rng = random.Random(f"c2-preflight:{config.seed}")
    half = config.half
    for label, sizes, offset in (("P", [d - j - 1 for j in js], 0), ("Q", js, half)):
        bits = list(range(offset, offset + half))
        first = None
        for _ in range(config.retry_budget):
            bad = separation_violations([random_subset_mask(rng, bits, s) for s in sizes], spec, limit=1)
            if not bad:
                break
            first = bad[0]
        else:
            raise SeparationInfeasibleError(
                f"{label}-family separation failed after {config.retry_budget} attempts: "
                f"{first['constraint']} (needs d sufficiently large)", dict(first, family=label))


def _pick(rng: random.Random, layer: tuple[int, ...], base: int) -> list[int]:
    return [(e & ~base).bit_length() - 1 for e in layer if base & ~e == 0]


def choose_interpolations2(W: LayerFamily, X: LayerFamily, config: SectionedConfig):
    """Returns ``(Y, records, separation_log)``."""
    jl, jr = config.bounds
    d, half = config.d, config.half
    slots = _slots(W, max(W.sections))
    if not slots:
        raise TooFewLayersError("no layer receives an interpolation set")
    spec = config.separation_spec()
    a_bits = list(range(half))
    b_bits = list(range(half, 2 * half))
    rng = random.Random(f"c2:{config.seed}")
    best = None
    for attempt in range(config.retry_budget):
        Ps = [random_subset_mask(rng, a_bits, d - j - 1) for j, _, _, _ in slots]
        Qs = [random_subset_mask(rng, b_bits, j) for j, _, _, _ in slots]
        labels = [[j, k] for j, k, _, _ in slots]
        viol = [dict(v, family="P") for v in separation_violations(Ps, spec, labels)]
        viol += [dict(v, family="Q") for v in separation_violations(Qs, spec, labels)]
        if best is None or len(viol) < len(best[2]):
            best = (Ps, Qs, viol)
        if not viol:
            break
    Ps, Qs, sep_log = best
    if config.enforce and sep_log:
        raise SeparationInfeasibleError(
            f"separation failed after {config.retry_budget} attempts: {sep_log[0]['constraint']} "
            "(needs d sufficiently large)", sep_log[0])
    records = []
    for (j, k, variant, g), P, Q in zip(slots, Ps, Qs):
        base = P | Q
        fs = _pick(rng, W.layers[g - 1], base)
        xs = _pick(rng, W.layers[g], base)
        if not fs or not xs:
            raise ConstructionFailure(f"sectioned covering fails for record ({j}, {k})")
        records.append(Interp2Record(j, k, variant, P, Q, rng.choice(fs), rng.choice(xs)))
    layers = [list(layer) for layer in X.layers]
    for r, (_, _, _, g) in zip(records, slots):
        layers[g - 1].append(r.I)
    Y = LayerFamily(X.universe, X.d, tuple(tuple(l) for l in layers), X.sections)
    return Y, records, sep_log


# Z: removal ---------------------------------------------------------------

@dataclass
class Removal2Set:
    resemblers_a: list[dict] = field(default_factory=list)
    resemblers_b: list[dict] = field(default_factory=list)
    envelopers: list[dict] = field(default_factory=list)

    def masks(self) -> set[int]:
        return {e["set"] for fam in (self.resemblers_a, self.resemblers_b, self.envelopers)
                for e in fam}

    def __len__(self) -> int:
        return len(self.masks())

    def to_json(self, universe: SymbolUniverse) -> dict:
        def ser(fam):
            return [dict(e, set=universe.serialize_mask(e["set"])) for e in fam]
        return {"resemblers_a": ser(self.resemblers_a), "resemblers_b": ser(self.resemblers_b),
                "envelopers": ser(self.envelopers)}


def removal_sets2(Y: LayerFamily, records: list[Interp2Record]) -> Removal2Set:
    where = Y.layer_of
    base = Y.universe.base()
    interp = {r.I for r in records}
    out = Removal2Set()
    for r in records:
        for kind, bit, R in r.resemblers():
            if R in where:
                entry = {"record": [r.j, r.k], "element": base.serialize_symbol(bit),
                         "layer": where[R], "section": Y.sections[where[R] - 1], "set": R}
                (out.resemblers_a if kind == "a" else out.resemblers_b).append(entry)
    mids = [r for r in records if r.is_mid]
    for layer_no, layer in enumerate(Y.layers, start=1):
        for S in layer:
            if S in interp:
                continue
            C = project_mask(S)
            for r in mids:
                if r.U & ~C == 0:
                    out.envelopers.append({"record": [r.j, r.k], "layer": layer_no,
                                           "section": Y.sections[layer_no - 1], "set": S})
    return out


def apply_removal(Y: LayerFamily, removal: Removal2Set) -> LayerFamily:
    gone = removal.masks()
    layers = []
    for i, layer in enumerate(Y.layers, start=1):
        kept = tuple(s for s in layer if s not in gone)
        if not kept:
            raise DegenerateLayerError(f"removal emptied layer {i}")
        layers.append(kept)
    return LayerFamily(Y.universe, Y.d, tuple(layers), Y.sections)


# lemma helpers ---------------------------------------------------------------

def u_family(records: list[Interp2Record]) -> list[int]:
    """The collection of A-parts U (mid records and end records)."""
    return [r.U for r in records]


def near_containing_us(C: int, Us: list[int]) -> list[int]:
    """Those U with at most one element outside C."""
    return [U for U in Us if popcount(U & ~C) <= 1]


def extend_to_d_minus_1(C: int, jp: int, d: int, a_mask: int, b_mask: int, Us: list[int]) -> int:
    """Extend C to a (d-1)-set with |A-part| <= d-jp, |B-part| <= jp and containing no U."""
    ca, cb = popcount(C & a_mask), popcount(C & b_mask)
    if popcount(C) > d - 1 or ca > d - jp or cb > jp:
        raise DomainError("C violates the cardinality hypotheses")
    if any(U & ~C == 0 for U in Us):
        raise DomainError("C already contains some U")
    out = C
    if ca < d - jp:
        while popcount(out & a_mask) < d - jp - 1:
            blocked = 0
            for U in Us:
                rest = U & ~out
                if popcount(rest) == 1:
                    blocked |= rest
            free = a_mask & ~out & ~blocked
            if not free:
                raise ConstructionFailure("no A element avoids completing a U")
            out |= free & -free
    target_b = d - 1 - popcount(out & a_mask)
    while popcount(out & b_mask) < target_b:
        free = b_mask & ~out
        out |= free & -free
    return out


def predicted_active_layers(Z: LayerFamily, S: int, records: list[Interp2Record]) -> list[int] | None:
    """Layers where S is active according to the narrow-set characterization.

    Returns None when pi(S) contains some U (the characterization does not apply).
    """
    C = project_mask(S)
    if any(r.U & ~C == 0 for r in records):
        return None
    u = Z.universe
    aw, bw = popcount(C & u.base().a_mask), popcount(C & u.base().b_mask)
    d = Z.d // 2
    last = {}
    for i, j in enumerate(Z.sections, start=1):
        last[j] = i
    out = []
    for i, j in enumerate(Z.sections, start=1):
        if bw <= j <= d - aw or (bw - 1 <= j <= d - aw and last[j] == i):
            out.append(i)
    return out


def case_probes(record: Interp2Record) -> dict[str, int]:
    """Width-d subsets of I obtained by deleting one column, keyed by case name."""
    I = record.I
    cases = {}
    for a in iter_bits(record.P):
        cases.setdefault("a", I & ~double_mask(1 << a))
    for b in iter_bits(record.Q):
        cases.setdefault("b", I & ~double_mask(1 << b))
    cases["f"] = I & ~double_mask(1 << record.f)
    cases["g" if record.is_mid else "h"] = I & ~double_mask(1 << record.x)
    return cases


def separation_diagnostics(records: list[Interp2Record]) -> dict:
    if len(records) < 2:
        return {"min_u_difference": None, "max_i_intersection_width": None}
    diffs, widths = [], []
    for a, b in combinations(records, 2):
        diffs += [popcount(a.U & ~b.U), popcount(b.U & ~a.U)]
        widths.append(popcount(project_mask(a.I & b.I)))
    return {"min_u_difference": min(diffs), "max_i_intersection_width": max(widths)}


def section_size_bound(n: int) -> int:
    """floor((n/4) / (3 ln(n/2))), the per-section layer bound for large d."""
    return math.floor((n / 4) / (3 * math.log(n / 2)))


def diameter_lower_bound(n: int, m: int, eps) -> float:
    """(1 - 2 eps) / (48 m) * n^2 / ln(n/2) - 1."""
    e = float(_fraction(eps))
    return (1 - 2 * e) / (48 * m) * n * n / math.log(n / 2) - 1


# pipeline ------------------------------------------------------------------

@dataclass
class Pipeline2Result:
    config: SectionedConfig
    V: LayerFamily
    W: LayerFamily
    X: LayerFamily
    Y: LayerFamily
    Z: LayerFamily
    records: list[Interp2Record]
    removal: Removal2Set
    sections: list[SectionStats]
    separation_log: list[dict]
    reports: dict = field(default_factory=dict)

    @property
    def clean(self) -> bool:
        return not self.separation_log

    @property
    def waived(self) -> list[str]:
        return self.config.waived(self.clean)

    def linking_sets_survive(self) -> bool:
        members = set(self.Z.members())
        return all(r.linking_set in members for r in self.records)

    def stats(self) -> dict:
        lb = diameter_lower_bound(self.config.n, self.config.m, self.config.epsilon)
        dz = diameter(self.Z)
        return {
            "V_layers": len(self.V.layers),
            "W_layers": len(self.W.layers),
            "Z_layers": len(self.Z.layers),
            "Z_sets": len(self.Z.members()),
            "diameter": dz,
            "hirsch_ratio": str(hirsch_ratio(self.Z)),
            "interpolation_sets": len(self.records),
            "removed": len(self.removal),
            "diameter_lower_bound": round(lb, 6),
            "diameter_meets_bound": dz >= lb,
            "linking_sets_survive": self.linking_sets_survive(),
            **separation_diagnostics(self.records),
        }

    def report_json(self) -> dict:
        base = self.V.universe
        return {
            "pipeline": "c2",
            "config": self.config.to_json(),
            "sections": [s.to_json() for s in self.sections],
            "stats": self.stats(),
            "separation_log": self.separation_log,
            "clean": self.clean,
            "waived": self.waived,
            "records": [r.to_json(base) for r in self.records],
            "removed": self.removal.to_json(self.Z.universe),
            "reports": {k: v.to_json() for k, v in self.reports.items()},
        }


def verify_pipeline2(Z: LayerFamily, budget: int = 5_000_000) -> dict:
    return {
        "dimension_reduction": check_dimension_reduction(Z, budget=budget),
        "adjacency": check_adjacency(Z),
        "strong_adjacency": check_strong_adjacency(Z),
        "endpoint_count": check_endpoint_count(Z),
    }


def pipeline2(config: SectionedConfig, verify: bool = True) -> Pipeline2Result:
    if config.enforce:
        _strict_preflight(config)
    V, stats = build_sectioned_family(config)
    keep = config.build_range if config.full_range else config.bounds
    W = merge_within_sections(V, config.m, keep)
    for s in stats:
        if keep[0] <= s.j <= keep[1]:
            s.delta = len(W.section_indices(s.j))
    X = double_family(W)
    Y, records, sep_log = choose_interpolations2(W, X, config)
    removal = removal_sets2(Y, records)
    Z = apply_removal(Y, removal)
    result = Pipeline2Result(config, V, W, X, Y, Z, records, removal, stats, sep_log)
    if verify:
        result.reports = verify_pipeline2(Z, config.check_budget)
    return result
