"""Hypergeometric tails, intersection concentration, and separated random set families."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .core import FaceSet, iter_bits, popcount
from .errors import BudgetExceededError, DomainError, SeparationInfeasibleError

DEFAULT_BIT_BUDGET = 4096
FLOAT_BIT_BUDGET = 1 << 18


@dataclass(frozen=True)
class HypergeomParams:
    """Population ``N`` with ``M`` successes, ``n`` draws without replacement."""

    N: int
    M: int
    n: int

    def __post_init__(self) -> None:
        if self.N < 0 or self.M < 0 or self.n < 0:
            raise DomainError("hypergeometric parameters must be non-negative")
        if self.M > self.N or self.n > self.N:
            raise DomainError("need M <= N and n <= N")

    @property
    def support(self) -> range:
        return range(max(0, self.n - (self.N - self.M)), min(self.M, self.n) + 1)


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


def hypergeom_pmf(p: HypergeomParams, k: int, bit_budget: int = DEFAULT_BIT_BUDGET):
    """C(M,k) C(N-M, n-k) / C(N, n).

    An exact Fraction while C(N, n) fits in ``bit_budget`` bits; beyond that a
    correctly rounded float from the exact integers, and past
    ``FLOAT_BIT_BUDGET`` bits a log-gamma estimate.
    """
    if k < 0 or k > p.M or p.n - k > p.N - p.M or k > p.n:
        return Fraction(0)
    if _log_comb(p.N, p.n) / math.log(2) > FLOAT_BIT_BUDGET:
        return math.exp(_log_comb(p.M, k) + _log_comb(p.N - p.M, p.n - k) - _log_comb(p.N, p.n))
    denom = math.comb(p.N, p.n)
    num = math.comb(p.M, k) * math.comb(p.N - p.M, p.n - k)
    if denom.bit_length() <= bit_budget:
        return Fraction(num, denom)
    return num / denom


def _log_comb(a: int, b: int) -> float:
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def tail_bound(p: HypergeomParams, t: float, side: str = "right") -> float:
    """exp(-2 t^2 n): bounds P(H >= (M/N + t) n) (right) and P(H <= (M/N - t) n) (left)."""
    if side not in ("right", "left"):
        raise DomainError("side must be 'right' or 'left'")
    if t < 0:
        raise DomainError("t must be non-negative")
    return math.exp(-2.0 * float(t) ** 2 * p.n)


def exact_tail(p: HypergeomParams, t, side: str = "right") -> Fraction:
    """Exact P(H >= (M/N + t) n) or P(H <= (M/N - t) n)."""
    t = _to_fraction(t)
    mean_frac = Fraction(p.M, p.N) if p.N else Fraction(0)
    if side == "right":
        return _right_tail_ge(p, (mean_frac + t) * p.n)
    if side == "left":
        return _left_tail_le(p, (mean_frac - t) * p.n)
    raise DomainError("side must be 'right' or 'left'")


def _right_tail_ge(p: HypergeomParams, threshold: Fraction) -> Fraction:
    lo = math.ceil(threshold)
    return sum((hypergeom_pmf(p, k) for k in p.support if k >= lo), Fraction(0))


def _right_tail_gt(p: HypergeomParams, threshold: Fraction) -> Fraction:
    return sum((hypergeom_pmf(p, k) for k in p.support if k > threshold), Fraction(0))


def _left_tail_le(p: HypergeomParams, threshold: Fraction) -> Fraction:
    return sum((hypergeom_pmf(p, k) for k in p.support if k <= threshold), Fraction(0))


def _left_tail_lt(p: HypergeomParams, threshold: Fraction) -> Fraction:
    return sum((hypergeom_pmf(p, k) for k in p.support if k < threshold), Fraction(0))


# concentration ---------------------------------------------------------------

def _two_set_bounds(N: int, p1: Fraction, p2: Fraction, eps: Fraction) -> dict:
    """Two-set tail bounds for |A1 & A2| with |Ai| = floor(N p_i)."""
    M = math.floor(N * p1)
    n = math.floor(N * p2)
    hi = N * (p1 * p2 + eps)
    lo = N * (p1 * p2 - eps)
    out = {"M": M, "n": n, "right_threshold": float(hi), "left_threshold": float(lo)}
    if n == 0 or N == 0:
        out.update(right_bound=1.0, left_bound=1.0, t_right=None, t_left=None)
        return out
    t_r = hi / n - Fraction(M, N)
    t_l = Fraction(M, N) - lo / n
    out["t_right"] = float(t_r)
    out["t_left"] = float(t_l)
    out["right_bound"] = math.exp(-2 * float(t_r) ** 2 * n) if t_r >= 0 else 1.0
    out["left_bound"] = math.exp(-2 * float(t_l) ** 2 * n) if t_l >= 0 else 1.0
    out["closed_form_bound"] = math.exp(-2 * float(eps) ** 2 * N / float(p2))
    return out


def multi_set_envelope(N: int, ps: Sequence, eps, side: str = "right") -> float:
    """Unclipped tail envelope for |A1 & ... & Aell| from the inductive decomposition.

    For two sets this is the floored two-set bound; each further set adds the two
    outer tails at eps' = eps / (2 p) plus the middle term
    2 N eps' exp(-2 ((eps - eps' p) / p)^2 N p).
    """
    ps = [_to_fraction(x) for x in ps]
    eps = _to_fraction(eps)
    if len(ps) < 2:
        raise DomainError("need at least two sets")
    if len(ps) == 2:
        b = _two_set_bounds(N, ps[0], ps[1], eps)
        return b["right_bound"] if side == "right" else b["left_bound"]
    p = ps[-1]
    eps_p = eps / (2 * p)
    head = ps[:-1]
    outer = multi_set_envelope(N, head, eps_p, "right") + multi_set_envelope(N, head, eps_p, "left")
    t = (eps - eps_p * p) / p
    middle = 2 * N * float(eps_p) * math.exp(-2 * float(t) ** 2 * N * float(p))
    return outer + middle


def concentration_check(N: int, p1, p2, eps, mode: str = "exact", trials: int = 100_000,
                        seed: int = 0, ell: int = 2, ps: Sequence | None = None,
                        bit_budget: int = DEFAULT_BIT_BUDGET) -> dict:
    """Tail probabilities of the intersection size of random sets, against their bounds.

    Set sizes are floor(N p_i).  ``mode`` is ``exact`` (two sets only) or
    ``monte_carlo``.  Returns a JSON-ready report.
    """
    p1, p2, eps = _to_fraction(p1), _to_fraction(p2), _to_fraction(eps)
    if ps is None:
        ps = [p1, p2] + [p2] * (ell - 2)
    ps = [_to_fraction(x) for x in ps]
    if any(not 0 < x < 1 for x in ps):
        raise DomainError("probabilities must lie strictly between 0 and 1")
    if eps <= 0:
        raise DomainError("eps must be positive")
    prod = Fraction(1)
    for x in ps:
        prod *= x
    hi = N * (prod + eps)
    lo = N * (prod - eps)
    report = {
        "N": N, "ps": [str(x) for x in ps], "eps": str(eps), "mode": mode,
        "sizes": [math.floor(N * x) for x in ps],
        "right_event": f"|cap| > {float(hi):.6g}",
        "left_event": f"|cap| < {float(lo):.6g}",
    }
    if mode == "exact":
        if len(ps) != 2:
            raise DomainError("exact mode supports two sets only")
        b = _two_set_bounds(N, ps[0], ps[1], eps)
        if math.comb(N, b["n"]).bit_length() > bit_budget:
            raise BudgetExceededError("exact tail exceeds the binomial bit budget")
        hp = HypergeomParams(N, b["M"], b["n"])
        right = _right_tail_gt(hp, hi)
        left = _left_tail_lt(hp, lo)
        report.update(
            right_tail=float(right), left_tail=float(left),
            right_tail_exact=str(right), left_tail_exact=str(left),
            right_bound=b["right_bound"], left_bound=b["left_bound"],
            closed_form_bound=b.get("closed_form_bound"),
            right_ok=right <= b["right_bound"] * (1 + 1e-12),
            left_ok=left <= b["left_bound"] * (1 + 1e-12),
        )
        return report
    if mode != "monte_carlo":
        raise DomainError("mode must be 'exact' or 'monte_carlo'")
    rng = random.Random(seed)
    sizes = report["sizes"]
    population = list(range(N))
    over = under = 0
    for _ in range(trials):
        cap = (1 << N) - 1
        for s in sizes:
            m = 0
            for b in rng.sample(population, s):
                m |= 1 << b
            cap &= m
        c = popcount(cap)
        if c > hi:
            over += 1
        if c < lo:
            under += 1
    env_r = multi_set_envelope(N, ps, eps, "right")
    env_l = multi_set_envelope(N, ps, eps, "left")
    report.update(
        trials=trials, seed=seed,
        right_frequency=over / trials, left_frequency=under / trials,
        right_envelope=env_r, left_envelope=env_l,
        right_envelope_clipped=min(1.0, env_r), left_envelope_clipped=min(1.0, env_l),
        right_ok=over / trials <= min(1.0, env_r),
        left_ok=under / trials <= min(1.0, env_l),
    )
    return report


# separated families -----------------------------------------------------------

@dataclass(frozen=True)
class SeparationSpec:
    """Constraints on a random family of sets.

    ``max_intersection``: every pair meets in at most this many elements.
    ``min_difference``: |X \\ Y| >= this for every ordered pair of distinct members.
    ``min_four_union``: every four members have a union of at least this size.
    """

    kind: str = "doubled_P"
    max_intersection: int | None = None
    min_difference: int | None = None
    min_four_union: int | None = None
    budget: int = 1000
    distinct: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("doubled_P", "sectioned_PQ"):
            raise DomainError(f"unknown separation kind {self.kind!r}")
        if self.budget < 1:
            raise DomainError("retry budget must be at least 1")
        for name in ("max_intersection", "min_difference", "min_four_union"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise DomainError(f"{name} must be non-negative")

    def to_json(self) -> dict:
        return {
            "kind": self.kind, "max_intersection": self.max_intersection,
            "min_difference": self.min_difference, "min_four_union": self.min_four_union,
            "budget": self.budget,
        }


def separation_violations(sets: Sequence[int], spec: SeparationSpec, labels=None,
                          limit: int | None = None) -> list[dict]:
    """All violated constraints, in deterministic order (up to ``limit``)."""
    labels = list(labels) if labels is not None else list(range(len(sets)))
    out: list[dict] = []

    def add(v: dict) -> bool:
        out.append(v)
        return limit is not None and len(out) >= limit

    for i, j in combinations(range(len(sets)), 2):
        a, b = sets[i], sets[j]
        if spec.distinct and a == b:
            if add({"constraint": "distinct", "members": [labels[i], labels[j]]}):
                return out
        if spec.max_intersection is not None:
            v = popcount(a & b)
            if v > spec.max_intersection:
                if add({"constraint": "pairwise_intersection", "members": [labels[i], labels[j]],
                        "value": v, "bound": spec.max_intersection}):
                    return out
        if spec.min_difference is not None:
            for x, y, lx, ly in ((a, b, labels[i], labels[j]), (b, a, labels[j], labels[i])):
                v = popcount(x & ~y)
                if v < spec.min_difference:
                    if add({"constraint": "pairwise_difference", "members": [lx, ly],
                            "value": v, "bound": spec.min_difference}):
                        return out
    if spec.min_four_union is not None and len(sets) >= 4:
        for combo in combinations(range(len(sets)), 4):
            u = 0
            for i in combo:
                u |= sets[i]
            v = popcount(u)
            if v < spec.min_four_union:
                if add({"constraint": "four_union", "members": [labels[i] for i in combo],
                        "value": v, "bound": spec.min_four_union}):
                    return out
    return out


def random_subset_mask(rng: random.Random, bits: Sequence[int], size: int) -> int:
    m = 0
    for b in rng.sample(list(bits), size):
        m |= 1 << b
    return m


def sample_separated_family(part, sizes: Sequence[int], spec: SeparationSpec, seed: int = 0):
    """Uniform subsets of ``part`` with the given sizes, resampled as a whole until ``spec`` holds.

    ``part`` is a FaceSet (result: FaceSets) or a bit mask (result: masks).
    """
    universe = part.universe if isinstance(part, FaceSet) else None
    mask = part.mask if isinstance(part, FaceSet) else int(part)
    bits = list(iter_bits(mask))
    if any(s < 0 or s > len(bits) for s in sizes):
        raise DomainError("requested sizes do not fit in the symbol part")
    rng = random.Random(seed)
    first = None
    for _ in range(spec.budget):
        sets = [random_subset_mask(rng, bits, s) for s in sizes]
        bad = separation_violations(sets, spec, limit=1)
        if not bad:
            if universe is not None:
                return [FaceSet(universe, m) for m in sets]
            return sets
        first = bad[0]
    raise SeparationInfeasibleError(
        f"no separated family after {spec.budget} attempts; first violation: {first['constraint']} "
        "(the separation lemmas only hold for sufficiently large d)", first)
