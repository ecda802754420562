"""Known-distribution online allocation.

Dispatch on the number of universally high-valued items C (worth >= alpha to
every type).  With many of them, one share partition of the most frequent
type is rearranged so every kept bundle carries exactly one C item and the
C-free bundles are reserved for that type.  Otherwise C is handed out as
singletons and the reduced instance runs the saturation pipeline: per-type
reservation caps ``M_i = floor(mu_i + n'^eps * sqrt(mu_i))`` (mu_i = n' p_i),
singleton reservation of each type's high-valued items in a computed order,
then bag filling until every type is saturated, with arrivals simply
draining their type's reserve queue.

Type indices inside this module are ranks in the probability-sorted order;
the public runner translates from and back to original type ids.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .core import (
    Allocation,
    Bundle,
    EMPTY_BUNDLE,
    FailureReason,
    InputError,
    InvariantViolation,
    NormalizedInstance,
    TrialReport,
    TypeDistribution,
    as_fraction,
    value,
)
from .exactpow import floor_plus_pow_sqrt, pow_sqrt_le, pow_sqrt_sum_ge
from .solver import mms_exact


@dataclass(frozen=True)
class StochasticParams:
    """Run parameters: claim level alpha (default 1/(2(1+eta))) and the
    concentration exponent epsilon in (0, 1/2)."""

    alpha: Fraction
    epsilon: Fraction
    eta: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_fraction(self.alpha))
        object.__setattr__(self, "epsilon", as_fraction(self.epsilon))
        if not 0 < self.alpha <= 1:
            raise InputError("alpha must lie in (0, 1]")
        if not 0 < self.epsilon < Fraction(1, 2):
            raise InputError("epsilon must lie in (0, 1/2)")

    @classmethod
    def from_eta(cls, eta, epsilon) -> "StochasticParams":
        eta = as_fraction(eta)
        if eta < 0:
            raise InputError("eta must be nonnegative")
        return cls(Fraction(1, 2 * (1 + eta)), as_fraction(epsilon), eta)


def reservation_cap(nprime: int, p: Fraction, epsilon: Fraction) -> int:
    """M = floor(n'p + n'^eps * sqrt(n'p)), computed exactly."""
    mu = nprime * as_fraction(p)
    return floor_plus_pow_sqrt(mu, nprime, as_fraction(epsilon), mu)


def universal_items(values: Sequence[Sequence[Fraction]], items: Iterable[int], alpha: Fraction) -> list[int]:
    alpha = as_fraction(alpha)
    return [g for g in sorted(items) if all(row[g] >= alpha for row in values)]


def high_c_condition(c_size: int, n: int, k: int, p1: Fraction, epsilon: Fraction) -> bool:
    """|C| >= n(1 - 1/k) + n^eps * sqrt(n p1), decided exactly."""
    slack = Fraction(c_size) - n * (1 - Fraction(1, k))
    return pow_sqrt_le(n, as_fraction(epsilon), n * as_fraction(p1), slack)


# -- saturation pipeline (no universally high-valued items) -------------------


@dataclass
class LowCState:
    """Preprocessing output: exclusive per-type reserve queues, the reached
    saturation status, and audit data."""

    alpha: Fraction
    epsilon: Fraction
    nprime: int
    probs: tuple[Fraction, ...]
    high_sets: list[list[int]]          # T_i, ascending item ids
    consumed: list[set[int]]            # items already reserved when a turn looks
    reserves: list[deque[Bundle]]       # G_i, disjoint across types
    caps: list[int]                     # M_i
    singleton_counts: list[int]         # reserved during the turn phase
    order: list[int]                    # the turn ordering L
    last_type: int                      # L[-1]
    unsaturated: set[int]
    remainder: list[int]                # unallocated item ids after preprocessing
    bag_count: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def all_saturated(self) -> bool:
        return not self.unsaturated


def preprocess_low_c(
    values: Sequence[Sequence[Fraction]],
    items: Iterable[int],
    nprime: int,
    probs: Sequence[Fraction],
    alpha: Fraction,
    epsilon: Fraction,
    *,
    check: bool = True,
    strict: bool = False,
) -> LowCState:
    """Reserve high-valued singletons in turn order, then bag-fill.

    Ordering: the first pair (i, j), scanned lexicographically, whose
    high-value sets satisfy |T_i \\ T_j| >= n' p_i / 2 puts i first and j
    last; otherwise the least-frequent type goes last.  During its turn a
    type reserves available high-valued items as singletons, preferring
    items the last type does not value highly, until it holds M_i bundles
    or runs out.  Bag filling then grows bags from the remainder in
    ascending item order until some unsaturated type claims (>= alpha),
    giving each bag to the lowest-ranked unsaturated claimant.

    An unsaturated outcome is a legal, reported state, not an error.
    """
    alpha = as_fraction(alpha)
    epsilon = as_fraction(epsilon)
    k = len(values)
    probs = tuple(as_fraction(p) for p in probs)
    if len(probs) != k:
        raise InputError("probs length mismatch")
    item_list = sorted(set(int(g) for g in items))

    high_sets = [[g for g in item_list if values[i][g] >= alpha] for i in range(k)]
    high_lookup = [set(t) for t in high_sets]
    caps = [reservation_cap(nprime, p, epsilon) for p in probs]

    order: list[int] | None = None
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            if 2 * len(high_lookup[i] - high_lookup[j]) >= nprime * probs[i]:
                order = [i] + [x for x in range(k) if x not in (i, j)] + [j]
                break
        if order is not None:
            break
    if order is None:
        order = list(range(k))  # probs are sorted, so the last rank is least frequent
    last_type = order[-1]

    reserves: list[deque[Bundle]] = [deque() for _ in range(k)]
    consumed: list[set[int]] = [set() for _ in range(k)]
    singleton_counts = [0] * k
    unsaturated = set(range(k))
    remaining = set(item_list)
    for pos, i in enumerate(order):
        while len(reserves[i]) < caps[i]:
            pick = None
            for g in high_sets[i]:
                if g in consumed[i] or g in high_lookup[last_type]:
                    continue
                pick = g
                break
            if pick is None:
                for g in high_sets[i]:
                    if g not in consumed[i]:
                        pick = g
                        break
            if pick is None:
                break
            reserves[i].append(Bundle((pick,)))
            singleton_counts[i] += 1
            remaining.discard(pick)
            for j in order[pos:]:
                consumed[j].add(pick)
        if len(reserves[i]) == caps[i]:
            unsaturated.discard(i)

    state = LowCState(
        alpha=alpha, epsilon=epsilon, nprime=nprime, probs=probs,
        high_sets=high_sets, consumed=consumed, reserves=reserves, caps=caps,
        singleton_counts=singleton_counts, order=order, last_type=last_type,
        unsaturated=set(unsaturated), remainder=[],
    )

    def violate(msg: str) -> None:
        if strict:
            raise InvariantViolation(msg)
        state.violations.append(msg)

    if check:
        # whoever is still open has exhausted its reachable high-valued items
        for i in unsaturated:
            for g in sorted(remaining):
                if values[i][g] >= alpha:
                    violate(f"open type {i} left high-valued item {g} unreserved")
                    break
        # and cannot hold too many high-valued items overall
        pk = probs[-1]
        mus = [nprime * p for p in probs]
        for i in unsaturated:
            slack = Fraction(len(high_sets[i])) - nprime * (1 - pk / 2)
            if not pow_sqrt_sum_ge(nprime, epsilon, mus, slack):
                violate(f"open type {i} holds {len(high_sets[i])} high-valued items")

    # bag filling
    scan = sorted(remaining)
    pos = 0
    while unsaturated and pos < len(scan):
        bag: list[int] = []
        vals = [Fraction(0)] * k
        claimant = None
        while pos < len(scan):
            g = scan[pos]
            pos += 1
            bag.append(g)
            for j in range(k):
                vals[j] += values[j][g]
            open_claims = [j for j in sorted(unsaturated) if vals[j] >= alpha]
            if open_claims:
                claimant = open_claims[0]
                break
        if claimant is None:
            break  # remainder exhausted without a claim; bag items stay unallocated
        bundle = Bundle(tuple(bag))
        reserves[claimant].append(bundle)
        state.bag_count += 1
        remaining.difference_update(bag)
        if check:
            for j in list(unsaturated):
                if vals[j] > 2 * alpha:
                    violate(f"bag worth {vals[j]} > 2*alpha to open type {j}")
        if len(reserves[claimant]) == caps[claimant]:
            unsaturated.discard(claimant)

    state.unsaturated = unsaturated
    state.remainder = sorted(remaining)
    if check:
        for i in range(k):
            if len(reserves[i]) > caps[i]:
                violate(f"type {i} holds {len(reserves[i])} > cap {caps[i]}")
    return state


def run_low_c(state: LowCState, arrival_ranks: Sequence[int]) -> list[Bundle | None]:
    """Drain reserve queues; ``None`` marks an agent whose queue was empty."""
    out: list[Bundle | None] = []
    for rank in arrival_ranks:
        if state.reserves[rank]:
            out.append(state.reserves[rank].popleft())
        else:
            out.append(None)
    return out


# -- abundant universally high-valued items -----------------------------------


def default_alpha_partition(
    valuation: Sequence[Fraction], items: Sequence[int], n: int, alpha: Fraction
) -> list[Bundle]:
    """Share partition of a valuation restricted to the given items (every
    bundle is worth >= alpha * restricted share for any alpha <= 1)."""
    sub = [valuation[g] for g in items]
    witness = mms_exact(sub, n).witness
    return [Bundle(tuple(items[x] for x in b)) for b in witness]


PartitionProvider = Callable[[Sequence[Fraction], Sequence[int], int, Fraction], list[Bundle]]


def run_high_c(
    values: Sequence[Sequence[Fraction]],
    items: Sequence[int],
    n_agents: int,
    c_items: Sequence[int],
    alpha: Fraction,
    arrival_ranks: Sequence[int],
    *,
    partition_provider: PartitionProvider = default_alpha_partition,
    check: bool = True,
) -> tuple[list[Bundle | None], dict]:
    """Route everyone through one rearranged share partition of rank-0.

    The partition is adjusted so each kept bundle carries exactly one
    universally high-valued item (extra ones split into fresh singletons);
    bundles with none are moved to a reserve only rank-0 agents may draw,
    capped at n - |C|.  Rank-0 agents drain that reserve first; everyone
    else, and rank-0 afterwards, draws from the main queue.
    """
    alpha = as_fraction(alpha)
    c_set = set(c_items)
    partition = partition_provider(values[0], list(items), n_agents, alpha)
    main: deque[Bundle] = deque()
    reserve0: deque[Bundle] = deque()
    for bundle in partition:
        cs = [g for g in bundle if g in c_set]
        if not cs:
            if len(reserve0) <= n_agents - len(c_items):
                reserve0.append(bundle)
        elif len(cs) == 1:
            main.append(bundle)
        else:
            main.append(Bundle(tuple(g for g in bundle if g not in cs[1:])))
            for g in cs[1:]:
                main.append(Bundle((g,)))
    if check:
        if len(main) != len(c_items):
            raise InvariantViolation(
                f"kept {len(main)} bundles for {len(c_items)} universal items")
        for b in main:
            if sum(1 for g in b if g in c_set) != 1:
                raise InvariantViolation("kept bundle without exactly one universal item")

    out: list[Bundle | None] = []
    for rank in arrival_ranks:
        if rank == 0 and reserve0:
            out.append(reserve0.popleft())
        elif main:
            out.append(main.popleft())
        else:
            out.append(None)
    info = {"branch": "highC", "mainBundles": len(c_items), "reserve0": len(reserve0)}
    return out, info


# -- dispatch ------------------------------------------------------------------


def known_d_engine(
    values: Sequence[Sequence[Fraction]],
    items: Sequence[int],
    n_agents: int,
    probs: Sequence[Fraction],
    alpha: Fraction,
    epsilon: Fraction,
    arrival_ranks: Sequence[int],
    *,
    partition_provider: PartitionProvider = default_alpha_partition,
    check: bool = True,
    strict: bool = False,
) -> tuple[list[Bundle | None], dict]:
    """Dispatch between the two regimes; returns per-agent bundles (None for
    an agent whose reserve ran dry) plus run metadata.

    Valuations and arrivals are already in probability-sorted rank space.
    """
    alpha = as_fraction(alpha)
    if len(arrival_ranks) != n_agents:
        raise InputError(f"{len(arrival_ranks)} arrivals for {n_agents} agents")
    k = len(values)
    c_items = universal_items(values, items, alpha)
    if high_c_condition(len(c_items), n_agents, k, probs[0], epsilon):
        return run_high_c(values, items, n_agents, c_items, alpha, arrival_ranks,
                          partition_provider=partition_provider, check=check)

    served = min(len(c_items), n_agents)
    out: list[Bundle | None] = [Bundle((c_items[t],)) for t in range(served)]
    info: dict = {"branch": "allC" if served == n_agents else "lowC", "universal": len(c_items)}
    if served < n_agents:
        c_set = set(c_items)
        rest_items = [g for g in items if g not in c_set]
        state = preprocess_low_c(
            values, rest_items, n_agents - served, probs, alpha, epsilon,
            check=check, strict=strict)
        out.extend(run_low_c(state, arrival_ranks[served:]))
        counts = [0] * k
        for rank in arrival_ranks[served:]:
            counts[rank] += 1
        info.update({
            "caps": list(state.caps),
            "counts": counts,
            "countsWithinCaps": all(c <= m for c, m in zip(counts, state.caps)),
            "ordering": list(state.order),
            "singletons": list(state.singleton_counts),
            "bags": state.bag_count,
            "allSaturated": state.all_saturated,
            "unsaturated": sorted(state.unsaturated),
            "violations": list(state.violations),
        })
    return out, info


def run_known_d(
    norm: NormalizedInstance,
    dist: TypeDistribution,
    arrivals: Sequence[int],
    *,
    alpha: Fraction | None = None,
    eta: Fraction | None = None,
    epsilon: Fraction,
    partition_provider: PartitionProvider = default_alpha_partition,
    check: bool = True,
    strict: bool = False,
) -> tuple[Allocation, TrialReport]:
    """Full run on a normalized instance with original-id arrivals."""
    if alpha is None:
        if eta is None:
            raise InputError("pass alpha or eta")
        alpha = Fraction(1, 2 * (1 + as_fraction(eta)))
    params = StochasticParams(alpha, epsilon, as_fraction(eta) if eta is not None else None)
    if dist.k != norm.k_types:
        raise InputError("distribution arity mismatch")
    n = norm.n_agents
    seq = list(arrivals)
    if len(seq) != n:
        raise InputError(f"arrival sequence has {len(seq)} types, expected {n}")
    values_sorted = tuple(norm.base.type_values[orig] for orig in dist.order)
    ranks = [dist.rank_of(t) for t in seq]
    bundles, info = known_d_engine(
        values_sorted, list(range(norm.m_items)), n, dist.probs,
        params.alpha, params.epsilon, ranks,
        partition_provider=partition_provider, check=check, strict=strict)

    entries = []
    ratios = []
    reason = FailureReason.NONE
    for agent, (ti, b) in enumerate(zip(seq, bundles)):
        if b is None:
            b = EMPTY_BUNDLE
            if reason is FailureReason.NONE:
                reason = FailureReason.EMPTY_RESERVE
        entries.append((agent, ti, b))
        if ti in norm.zero_mms_types:
            ratios.append(Fraction(1))
        else:
            ratios.append(value(norm.base.type_values[ti], b))
    allocation = Allocation(tuple(entries))
    report = TrialReport.build(ratios, params.alpha, reason, details=info)
    return allocation, report
