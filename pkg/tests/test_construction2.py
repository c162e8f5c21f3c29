from __future__ import annotations

import math
import random
from fractions import Fraction
from functools import lru_cache

import pytest
from hypothesis import given, settings, strategies as st

from spgkit.construction2 import (
    Interp2Record,
    SectionedConfig,
    build_sectioned_family,
    case_probes,
    diameter_lower_bound,
    extend_to_d_minus_1,
    merge_within_sections,
    near_containing_us,
    pipeline2,
    predicted_active_layers,
    section_bounds,
    section_size_bound,
    u_family,
)
from spgkit.core import ContainmentIndex, LayerFamily, SymbolUniverse, popcount, project_mask
from spgkit.covering import build_disjoint_covering_designs
from spgkit.errors import DomainError, SeparationInfeasibleError, TooFewLayersError
from spgkit.properties import check_covering_family, check_sectioned_covering
from spgkit.random_sets import SeparationSpec, random_subset_mask, sample_separated_family


@lru_cache(maxsize=None)
def _run16():
    return pipeline2(SectionedConfig(16, 2, seed=0))


@pytest.fixture(scope="module")
def run16():
    return _run16()


@pytest.fixture(scope="module")
def run8_full():
    return pipeline2(SectionedConfig(8, 1, seed=0, full_range=True))


def test_section_bounds():
    assert section_bounds(12, Fraction(1, 4)) == (3, 9)
    assert section_bounds(4, "1/4") == (1, 3)
    assert section_bounds(16, 0.25) == (4, 12)
    for bad in (0, "1/2", "3/4"):
        with pytest.raises(DomainError):
            section_bounds(8, bad)


def test_config_validation():
    with pytest.raises(DomainError):
        SectionedConfig(10)
    with pytest.raises(DomainError):
        SectionedConfig(16, m=12, mode="theorem")
    with pytest.raises(DomainError):
        SectionedConfig(16, m=13, epsilon="1/5", mode="theorem")
    cfg = SectionedConfig(16, m=13, mode="theorem")
    assert cfg.d == 4 and cfg.union_bound == math.ceil(13 * 4 / 16)


def test_section_size_bound():
    # 3 ln 24 ~ 9.534
    assert section_size_bound(48) == 1 == math.floor(12 / (3 * math.log(24)))


def test_diameter_bound_formula():
    n, m = 48, 1
    expected = (1 - 0.5) / 48 * n * n / math.log(24) - 1
    assert diameter_lower_bound(n, m, "1/4") == pytest.approx(expected)


def _sectioned(sizes: list[int]) -> LayerFamily:
    u = SymbolUniverse.bipartite(sum(sizes), 1)
    layers, sections, bit = [], [], 0
    for j, ell in enumerate(sizes, start=1):
        for _ in range(ell):
            layers.append((1 << bit,))
            sections.append(j)
            bit += 1
    return LayerFamily(u, 1, tuple(layers), tuple(sections))


def test_merge_within_sections_sizes():
    W = merge_within_sections(_sectioned([5, 4]), 2)
    assert W.sections == (1, 1, 2, 2)
    assert [len(l) for l in W.layers] == [2, 3, 2, 2]
    with pytest.raises(TooFewLayersError) as err:
        merge_within_sections(_sectioned([5, 1]), 2)
    assert err.value.section == 2


def test_m1_full_range_is_identity():
    V, _ = build_sectioned_family(SectionedConfig(16, 1, full_range=True))
    assert merge_within_sections(V, 1) == V


def test_family_shapes_and_covering(run16):
    V, W, half = run16.V, run16.W, run16.config.half
    d = run16.config.d
    amask = (1 << half) - 1
    for layer, j in zip(V.layers, V.sections):
        for s in layer:
            assert (popcount(s & amask), popcount(s >> half)) == (d - j, j)
    assert check_sectioned_covering(V, m=1).passed
    assert check_sectioned_covering(W, m=2).passed


def test_min_identity(run16):
    cfg = run16.config
    for s in run16.sections:
        a = build_disjoint_covering_designs(cfg.half, cfg.d - s.j, cfg.seed).num_layers
        b = build_disjoint_covering_designs(cfg.half, s.j, cfg.seed).num_layers
        assert (s.a_layers, s.b_layers) == (a, b)
        assert s.ell == min(a, b) == len(run16.V.section_indices(s.j))
        assert s.delta == s.ell // cfg.m


def _layer_index(W: LayerFamily, j: int, k: int) -> int:
    return W.section_indices(j)[k - 1]


def test_record_invariants(run16):
    X, W = run16.X, run16.W
    d = run16.config.d
    amask = (1 << run16.config.half) - 1
    for r in run16.records:
        g = _layer_index(W, r.j, r.k)
        assert popcount(project_mask(r.I)) == d + 1
        assert project_mask(r.I) & amask == r.U
        assert r.source_set in X.layers[g - 1]
        if r.is_mid:
            assert popcount(r.U) == d - r.j + 1
            assert r.linking_set in X.layers[g]
            assert W.sections[g] == r.j
        else:
            assert popcount(r.U) == d - r.j
            assert r.linking_set in X.layers[_layer_index(W, r.j + 1, 1) - 1]


def test_variants_by_slot(run16):
    W = run16.W
    for r in run16.records:
        delta_j = len(W.section_indices(r.j))
        assert r.is_mid == (r.k < delta_j)
    assert max(r.j for r in run16.records if not r.is_mid) < max(W.sections)


def test_y_linkage(run16, run8_full):
    assert check_covering_family(run16.Y, "linkage").passed
    assert check_covering_family(run8_full.Y, "linkage").passed


def test_resembler_geometry(run16):
    d = run16.config.d
    for r in run16.records:
        names = set()
        for kind, bit, R in r.resemblers():
            shared = R & r.I
            assert popcount(shared) == 2 * d - 2
            assert popcount(project_mask(shared)) == d
            names.add(R)
        assert r.source_set not in names and r.linking_set not in names


def test_end_resembler_sections(run16):
    Y = run16.Y
    where = Y.layer_of
    for r in run16.records:
        if r.is_mid:
            continue
        for kind, _, R in r.resemblers():
            if R in where:
                j = Y.sections[where[R] - 1]
                assert j == (r.j + 1 if kind == "a" else r.j)


def test_envelopers(run16):
    rec = {(r.j, r.k): r for r in run16.records}
    for e in run16.removal.envelopers:
        r = rec[tuple(e["record"])]
        assert r.is_mid
        assert e["section"] < r.j
        assert r.U & ~project_mask(e["set"]) == 0


def test_removal_spares_interpolation_and_linking(run16):
    gone = run16.removal.masks()
    assert not gone & {r.I for r in run16.records}
    assert run16.linking_sets_survive()


def test_case_probes(run16, run8_full):
    # correspondence containers of a one-column deletion of I lie next to I's layer
    for run in (run16, run8_full):
        Z, d = run.Z, run.config.d
        index = ContainmentIndex(Z.members(), Z.universe.size)
        interp = {r.I for r in run.records}
        where = Z.layer_of
        for r in run.records:
            probes = case_probes(r)
            expected = {"f", "g" if r.is_mid else "h"}
            expected |= {"a"} if r.P else set()
            expected |= {"b"} if r.Q else set()
            assert set(probes) == expected
            home = where[r.I]
            for S in probes.values():
                assert popcount(project_mask(S)) == d
                corr = [c for c in index.container_masks(S) if c not in interp]
                assert len(corr) <= 1
                for c in corr:
                    assert abs(where[c] - home) <= 1


def test_strict_preflight_rejects_small_d():
    with pytest.raises(SeparationInfeasibleError) as err:
        pipeline2(SectionedConfig(48, 1, mode="strict"))
    assert err.value.constraint == {"constraint": "pairwise_difference", "family": "P",
                                    "value": 3, "bound": 5}


def test_waivers():
    cfg = SectionedConfig(16, 2)
    assert cfg.waived(True) == ["m >= 13", "d sufficiently large"]
    assert "separation thresholds" in cfg.waived(False)


def test_predicted_layers_shape(run16):
    Z = run16.Z
    out = predicted_active_layers(Z, 0, run16.records)
    assert out == list(range(1, Z.num_layers + 1))
    r = run16.records[0]
    assert predicted_active_layers(Z, r.I, run16.records) is None


def test_deterministic():
    a = pipeline2(SectionedConfig(16, 2, seed=3), verify=False)
    b = pipeline2(SectionedConfig(16, 2, seed=3), verify=False)
    assert a.report_json() == b.report_json()


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_extension_lemma(seed):
    run = _run16()
    rng = random.Random(seed)
    cfg = run.config
    d, half = cfg.d, cfg.half
    amask, bmask = (1 << half) - 1, ((1 << half) - 1) << half
    Us = u_family(run.records)
    jl, jr = cfg.bounds
    jp = rng.randint(jl, jr - 1)
    for _ in range(50):
        ca = rng.randint(0, d - jp)
        cb = rng.randint(0, min(jp, d - 1 - ca))
        C = random_subset_mask(rng, range(half), ca) | random_subset_mask(rng, range(half, 2 * half), cb)
        if not any(U & ~C == 0 for U in Us):
            break
    else:
        return
    out = extend_to_d_minus_1(C, jp, d, amask, bmask, Us)
    assert popcount(out) == d - 1
    assert C & ~out == 0
    assert popcount(out & amask) <= d - jp and popcount(out & bmask) <= jp
    assert not any(U & ~out == 0 for U in Us)


def _synthetic_us(seed: int, d: int = 80):
    """U-sets shaped like a strict construction at d = 80 (A has 2d symbols)."""
    jl, jr = section_bounds(d, "1/4")
    sizes = [d - j - 1 for j in range(jl, jr)]
    spec = SeparationSpec("sectioned_PQ", min_difference=5,
                          min_four_union=math.ceil(13 * d / 16), budget=500)
    Ps = sample_separated_family((1 << (2 * d)) - 1, sizes, spec, seed=seed)
    rng = random.Random(seed)
    Us = []
    for P in Ps:
        free = [b for b in range(2 * d) if not P >> b & 1]
        extra = rng.sample(free, rng.choice((1, 2)))
        Us.append(P | sum(1 << b for b in extra))
    return Us


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_avoid_us(seed):
    d = 80
    Us = _synthetic_us(seed % 7, d)
    rng = random.Random(seed)
    limit = 3 * d // 4
    # adversarial C: glue together near-copies of several small U's
    small = sorted(Us, key=popcount)[:8]
    rng.shuffle(small)
    C = 0
    for U in small:
        bits = [b for b in range(2 * d) if U >> b & 1]
        part = U & ~(1 << rng.choice(bits))
        if popcount(C | part) <= limit:
            C |= part
    free = [b for b in range(2 * d) if not C >> b & 1]
    for b in rng.sample(free, rng.randint(0, limit - popcount(C))):
        C |= 1 << b
    assert popcount(C) <= limit
    assert len(near_containing_us(C, Us)) <= 3
