from __future__ import annotations

from fractions import Fraction
from math import exp

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from spgkit.errors import DomainError, SeparationInfeasibleError
from spgkit.random_sets import (
    HypergeomParams,
    SeparationSpec,
    concentration_check,
    exact_tail,
    hypergeom_pmf,
    sample_separated_family,
    separation_violations,
    tail_bound,
)


@st.composite
def params(draw, max_n=30):
    N = draw(st.integers(min_value=1, max_value=max_n))
    M = draw(st.integers(min_value=0, max_value=N))
    n = draw(st.integers(min_value=0, max_value=N))
    return HypergeomParams(N, M, n)


def test_pmf_example():
    assert hypergeom_pmf(HypergeomParams(10, 5, 4), 2) == Fraction(10, 21)
    assert hypergeom_pmf(HypergeomParams(10, 5, 4), 5) == 0


def test_tail_example():
    p = HypergeomParams(20, 10, 8)
    assert exact_tail(p, Fraction(1, 4)) == Fraction(10695, 125970)
    assert tail_bound(p, 0.25) == pytest.approx(exp(-1))
    assert tail_bound(p, 0) == 1.0


def test_tail_bound_decreasing():
    p = HypergeomParams(20, 10, 8)
    values = [tail_bound(p, t / 10) for t in range(1, 10)]
    assert all(a > b for a, b in zip(values, values[1:]))
    with pytest.raises(DomainError):
        tail_bound(p, -0.1)


@settings(max_examples=200, deadline=None)
@given(params())
def test_pmf_normalized_and_symmetric(p):
    total = sum(hypergeom_pmf(p, k) for k in range(p.n + 1))
    assert total == 1
    for k in range(p.n + 1):
        assert hypergeom_pmf(p, k) == hypergeom_pmf(HypergeomParams(p.N, p.n, p.M), k)
        assert hypergeom_pmf(p, k) == oracles.hypergeom_pmf(p.N, p.M, p.n, k)


@settings(max_examples=200, deadline=None)
@given(params(), st.fractions(min_value=0, max_value=1, max_denominator=40))
def test_exact_tail_below_bound(p, t):
    for side in ("right", "left"):
        assert float(exact_tail(p, t, side)) <= tail_bound(p, float(t), side) * (1 + 1e-12)


def test_concentration_exact_example():
    rep = concentration_check(16, "1/2", "1/2", "1/8")
    # sizes 8 and 8; the right event is |cap| > 16 * (1/4 + 1/8) = 6
    expected = sum(oracles.hypergeom_pmf(16, 8, 8, k) for k in range(7, 9))
    assert rep["right_tail_exact"] == str(expected) == "1/198"
    assert rep["right_ok"] and rep["left_ok"]


def test_concentration_large_eps():
    rep = concentration_check(12, "1/3", "1/2", "1/2")
    assert rep["right_tail"] <= rep["right_bound"]


def test_concentration_domain():
    with pytest.raises(DomainError):
        concentration_check(10, 0, "1/2", "1/8")
    with pytest.raises(DomainError):
        concentration_check(10, "1/2", "1/2", 0)


def test_sampler_pairwise_intersection():
    spec = SeparationSpec(max_intersection=1, budget=500)
    a, b = sample_separated_family((1 << 12) - 1, [3, 3], spec, seed=3)
    assert bin(a & b).count("1") <= 1


def test_sampler_doubled_scale():
    # n = 2d = 40, delta - 1 = 6 sets of size d - 1 = 19 drawn from A
    spec = SeparationSpec(max_intersection=16, budget=2000)
    sets = sample_separated_family((1 << 40) - 1, [19] * 6, spec, seed=0)
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            assert bin(sets[i] & sets[j]).count("1") <= 16


def test_sampler_infeasible():
    spec = SeparationSpec(max_intersection=3, budget=50, distinct=False)
    with pytest.raises(SeparationInfeasibleError) as err:
        sample_separated_family(0b11111, [5, 5], spec)
    assert err.value.constraint["constraint"] == "pairwise_intersection"


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_sampler_output_rechecked(seed):
    spec = SeparationSpec(kind="sectioned_PQ", min_difference=3, min_four_union=14, budget=5000)
    sets = sample_separated_family((1 << 24) - 1, [5, 6, 7, 5, 6], spec, seed=seed)
    assert separation_violations(sets, spec) == []
    assert sets == sample_separated_family((1 << 24) - 1, [5, 6, 7, 5, 6], spec, seed=seed)
