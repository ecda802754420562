"""Online allocation when the arrival distribution must be learned.

With at least ceil(n^eps') universally high-valued items, that many agents
are served singletons while their types are recorded, and the estimated
distribution hands the rest to the known-distribution pipeline.  Otherwise
the leftover items are split at random into a learning basket and a main
basket; the reservation allocator serves the learning window out of the
first basket at claim level 1/2 (one k-th of the basket's share floor of
k/2, which the random split guarantees with overwhelming probability), and
the saturation pipeline serves everyone else from the second basket under
the learned distribution.

Parameters follow ``eps = (5+4c)/18`` and ``eps' = (2+c)/3`` for a constant
0 < c < 0.1; all ceilings, floors and threshold comparisons are exact.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .adversarial import TentativeState, step_adversarial
from .core import (
    Allocation,
    Bundle,
    EMPTY_BUNDLE,
    FailureReason,
    InputError,
    NormalizedInstance,
    PoolExhausted,
    TrialReport,
    TypeDistribution,
    as_fraction,
    value,
)
from .exactpow import ceil_pow, pow_le
from .rng import bernoulli, substream
from .stochastic import (
    PartitionProvider,
    default_alpha_partition,
    known_d_engine,
    preprocess_low_c,
    run_low_c,
    universal_items,
)


@dataclass(frozen=True)
class UnknownParams:
    """Derived run parameters for a given instance size and constant c."""

    c: Fraction
    epsilon: Fraction
    epsilon_prime: Fraction
    n: int
    learn_window: int

    @classmethod
    def for_instance(cls, n: int, c) -> "UnknownParams":
        c = as_fraction(c)
        if not 0 < c < Fraction(1, 10):
            raise InputError("c must lie in (0, 0.1)")
        if n < 1:
            raise InputError("n must be positive")
        epsilon = (5 + 4 * c) / 18
        epsilon_prime = (2 + c) / 3
        return cls(c, epsilon, epsilon_prime, n, ceil_pow(n, epsilon_prime))

    @property
    def delta_exponent(self) -> Fraction:
        # the basket-value check uses delta = n ** -((eps' - c) / 2)
        return (self.epsilon_prime - self.c) / 2


def learn_distribution(observed_types: Sequence[int], k: int) -> TypeDistribution:
    """Empirical frequencies of an observation window, as exact rationals."""
    obs = list(observed_types)
    if not obs:
        raise InputError("empty observation window")
    if any(not 0 <= t < k for t in obs):
        raise InputError("observed type id out of range")
    counts = [0] * k
    for t in obs:
        counts[t] += 1
    return TypeDistribution.from_probs([Fraction(c, len(obs)) for c in counts])


def random_split(items: Sequence[int], p: Fraction, rng: random.Random) -> tuple[Bundle, Bundle]:
    """Independent exact Bernoulli(p) per item, ascending: (kept, rest)."""
    p = as_fraction(p)
    if not 0 <= p <= 1:
        raise InputError("p must lie in [0, 1]")
    b1: list[int] = []
    b2: list[int] = []
    for g in sorted(items):
        (b1 if bernoulli(rng, p) else b2).append(g)
    return Bundle(tuple(b1)), Bundle(tuple(b2))


def basket_value_ok(v: Fraction, n: int, k: int, window: int, params: UnknownParams) -> bool:
    """Decide ``v >= (1 - delta) * 2k * window`` exactly, with
    delta = n ** -((eps' - c)/2)."""
    full = 2 * k * window
    shortfall = 1 - as_fraction(v) / full
    if shortfall <= 0:
        return True
    # v >= (1-delta)*full  <=>  delta >= shortfall  <=>  n^exp <= 1/shortfall
    return pow_le(n, params.delta_exponent, 1 / shortfall)


def run_unknown_d(
    norm: NormalizedInstance,
    arrivals: Sequence[int],
    *,
    alpha: Fraction | None = None,
    eta: Fraction | None = None,
    c,
    seed: int = 0,
    check: bool = True,
    partition_provider: PartitionProvider = default_alpha_partition,
    precomputed_universal: Sequence[int] | None = None,
) -> tuple[Allocation, TrialReport]:
    """Serve n agents whose types stream in from an unknown distribution.

    The report's ratios are against the instance's normalized shares; the
    learning window, basket sizes, the learned distribution, and the exact
    basket-concentration verdict land in ``details``.
    """
    if alpha is None:
        if eta is None:
            raise InputError("pass alpha or eta")
        alpha = Fraction(1, 2 * (1 + as_fraction(eta)))
    alpha = as_fraction(alpha)
    if not 0 < alpha <= Fraction(1, 2):
        raise InputError("alpha must lie in (0, 1/2] for the split stage")
    n, k, m = norm.n_agents, norm.k_types, norm.m_items
    seq = list(arrivals)
    if len(seq) != n:
        raise InputError(f"arrival sequence has {len(seq)} types, expected {n}")
    params = UnknownParams.for_instance(n, c)
    window = params.learn_window
    flags: list[str] = []
    details: dict = {"window": window}

    if window >= n:
        # too few agents to learn anything; fall back to the 1/k guarantee
        from .adversarial import run_adversarial

        flags.append("degenerateScale")
        allocation, rep = run_adversarial(norm, seq, alpha=alpha, check=check, strict=False)
        details["branch"] = "degenerate"
        if rep.details and rep.details.get("violations"):
            details["violations"] = rep.details["violations"]
        report = TrialReport.build(
            rep.per_agent_ratio, alpha, rep.failure_reason, tuple(flags), details)
        return allocation, report

    if precomputed_universal is not None:
        c_items = list(precomputed_universal)
    else:
        c_items = universal_items(norm.base.type_values, range(m), alpha)
    zero = norm.zero_mms_types
    bundles: list[Bundle] = []
    reason = FailureReason.NONE

    if len(c_items) >= window:
        details["branch"] = "learnFromUniversal"
        bundles.extend(Bundle((c_items[t],)) for t in range(window))
        leftover_c = c_items[window:]
        learned = learn_distribution(seq[:window], k)
        details["learned"] = [str(p) for p in learned.original_probs()]
        taken = set(c_items)
        rest_items = sorted([g for g in range(m) if g not in taken] + leftover_c)
        values_sorted = tuple(norm.base.type_values[orig] for orig in learned.order)
        ranks = [learned.rank_of(t) for t in seq[window:]]
        sub, info = known_d_engine(
            values_sorted, rest_items, n - window, learned.probs,
            alpha, params.epsilon, ranks,
            partition_provider=partition_provider, check=check)
        details["dispatch"] = info
        for b in sub:
            if b is None:
                b = EMPTY_BUNDLE
                if reason is FailureReason.NONE:
                    reason = FailureReason.EMPTY_RESERVE
            bundles.append(b)
    else:
        details["branch"] = "splitAndLearn"
        bundles.extend(Bundle((g,)) for g in c_items)
        served_c = len(c_items)
        p = Fraction(2 * k * window, n - served_c)
        if p > 1:
            p = Fraction(1)
            flags.append("outOfRegime")
        details["splitProb"] = str(p)
        c_set = set(c_items)
        rest = [g for g in range(m) if g not in c_set]
        basket1, basket2 = random_split(rest, p, substream(seed, "split"))
        details["basket1"] = len(basket1)
        details["basket2"] = len(basket2)
        basket1_values = [value(row, basket1) for row in norm.base.type_values]
        details["basket1Values"] = [str(v) for v in basket1_values]
        details["basket1ConcentrationOk"] = all(
            basket_value_ok(v, n, k, window, params)
            for i, v in enumerate(basket1_values) if i not in zero)

        learn_count = min(window, n - served_c)
        if learn_count < window:
            flags.append("truncatedWindow")
        # learning stage: reservation allocator on basket 1 at claim level 1/2
        state = TentativeState.create(
            norm.base.type_values, basket1.items, learn_count,
            thresholds=tuple(Fraction(1, 2) for _ in range(k)),
            scales=tuple(Fraction(k, 2) for _ in range(k)),
            check=False, strict=False)
        learn_types = seq[served_c:served_c + learn_count]
        for t in learn_types:
            try:
                b = step_adversarial(state, t)
            except PoolExhausted:
                b = EMPTY_BUNDLE
                state.arrived += 1
                if reason is FailureReason.NONE:
                    reason = FailureReason.VALUE_BELOW_ALPHA
            bundles.append(b)
        if learn_types:
            learned = learn_distribution(learn_types, k)
        else:
            learned = TypeDistribution.from_probs([Fraction(1, k)] * k)
            flags.append("noObservations")
        details["learned"] = [str(p_) for p_ in learned.original_probs()]

        rest_agents = n - served_c - learn_count
        if rest_agents > 0:
            values_sorted = tuple(norm.base.type_values[orig] for orig in learned.order)
            ranks = [learned.rank_of(t) for t in seq[served_c + learn_count:]]
            state2 = preprocess_low_c(
                values_sorted, basket2.items, rest_agents, learned.probs,
                alpha, params.epsilon, check=check)
            sub = run_low_c(state2, ranks)
            counts = [0] * k
            for r_ in ranks:
                counts[r_] += 1
            details["dispatch"] = {
                "branch": "lowC",
                "caps": list(state2.caps),
                "counts": counts,
                "countsWithinCaps": all(x <= cap for x, cap in zip(counts, state2.caps)),
                "allSaturated": state2.all_saturated,
                "unsaturated": sorted(state2.unsaturated),
                "violations": list(state2.violations),
            }
            for b in sub:
                if b is None:
                    b = EMPTY_BUNDLE
                    if reason is FailureReason.NONE:
                        reason = FailureReason.EMPTY_RESERVE
                bundles.append(b)

    entries = tuple((agent, ti, b) for agent, (ti, b) in enumerate(zip(seq, bundles)))
    allocation = Allocation(entries)
    ratios = [
        Fraction(1) if ti in zero else value(norm.base.type_values[ti], b)
        for _, ti, b in entries
    ]
    report = TrialReport.build(ratios, alpha, reason, tuple(flags), details)
    return allocation, report
