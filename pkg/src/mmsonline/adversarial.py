"""Online allocation under adversarial type arrivals.

The allocator keeps, for every type, a collection of tentatively reserved
bundles each worth at least 1/k to that type (bundles may be shared across
types but never overlap in items).  An arriving agent takes her oldest
reserve when one exists; otherwise bags are grown from the unreserved pool
until some type still in the bookkeeping's unsaturated set claims one, with
unclaimed-by-the-agent bags reserved for the claimants.  After every arrival
each type's reserve list is trimmed to the number of agents still to come.

All "arbitrary" choices of the procedure are pinned: FIFO reserve pick,
ascending-index bag filling, LIFO trimming, ascending type order when a bag
is reserved for several claimants.  A seeded-random variant of those choices
exists for robustness testing.
"""

from __future__ import annotations

import random
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
    PoolExhausted,
    TrialReport,
    ValidationError,
    as_fraction,
    value,
)
from .exactpow import mul_sqrt_lt


@dataclass
class TentativeState:
    """Full mutable state of one online run.

    ``remaining`` is the set of never-allocated items; the pool of fillable
    items (remaining minus everything reserved) is kept as an ascending list
    with a cursor and rebuilt only when a trimmed reserve returns items.

    ``thresholds[i]`` is the claim level of type i (``scale/k``) and
    ``scales[i]`` the per-type share unit used by the bookkeeping checks;
    on a normalized instance these are 1/k and 1.
    """

    values: tuple[tuple[Fraction, ...], ...]
    n: int
    k: int
    thresholds: tuple[Fraction, ...]
    scales: tuple[Fraction, ...]
    check_types: tuple[int, ...]
    reserves: list[deque[Bundle]]
    remaining: set[int]
    remaining_value: list[Fraction]
    unsaturated: set[int]
    arrived: int = 0
    check: bool = True
    strict: bool = True
    rng: random.Random | None = None
    pool: list[int] = field(default_factory=list)
    pool_pos: int = 0
    reserved_items: set[int] = field(default_factory=set)
    bundle_refs: dict[Bundle, int] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)
    trace: list[dict] | None = None

    # -- construction -----------------------------------------------------

    @classmethod
    def create(
        cls,
        values: Sequence[Sequence[Fraction]],
        items: Iterable[int],
        n: int,
        *,
        thresholds: Sequence[Fraction] | None = None,
        scales: Sequence[Fraction] | None = None,
        check_types: Sequence[int] | None = None,
        check: bool = True,
        strict: bool = True,
        rng: random.Random | None = None,
        trace: bool = False,
    ) -> "TentativeState":
        """Preprocessing: reserve up to n high-valued singletons per type.

        Scanning types in ascending order and items in ascending order, every
        item worth at least the type's claim threshold becomes a singleton
        reserve of that type (the same singleton may serve several types),
        until the type holds n of them.
        """
        k = len(values)
        if k < 1:
            raise InputError("need at least one type")
        item_list = sorted(set(int(g) for g in items))
        vals = tuple(tuple(as_fraction(v) for v in row) for row in values)
        if thresholds is None:
            thresholds = tuple(Fraction(1, k) for _ in range(k))
        else:
            thresholds = tuple(as_fraction(t) for t in thresholds)
        if scales is None:
            scales = tuple(t * k for t in thresholds)
        else:
            scales = tuple(as_fraction(s) for s in scales)
        if check_types is None:
            check_types = tuple(range(k))

        singletons: dict[int, Bundle] = {}
        reserves: list[deque[Bundle]] = [deque() for _ in range(k)]
        for i in range(k):
            for g in item_list:
                if len(reserves[i]) >= n:
                    break
                if vals[i][g] >= thresholds[i]:
                    reserves[i].append(singletons.setdefault(g, Bundle((g,))))
        refs: dict[Bundle, int] = {}
        for dq in reserves:
            for b in dq:
                refs[b] = refs.get(b, 0) + 1
        reserved = {g for b in refs for g in b}
        remaining = set(item_list)
        remaining_value = [sum((vals[i][g] for g in item_list), Fraction(0)) for i in range(k)]

        state = cls(
            values=vals,
            n=n,
            k=k,
            thresholds=thresholds,
            scales=scales,
            check_types=tuple(check_types),
            reserves=reserves,
            remaining=remaining,
            remaining_value=remaining_value,
            unsaturated={i for i in range(k) if len(reserves[i]) < n},
            check=check,
            strict=strict,
            rng=rng,
            pool=[g for g in item_list if g not in reserved],
            reserved_items=reserved,
            bundle_refs=refs,
            trace=[] if trace else None,
        )
        if trace:
            state.trace.append({
                "event": "preprocess",
                "reserveSizes": [len(dq) for dq in reserves],
                "unsaturated": sorted(state.unsaturated),
            })
        if check:
            state._check_pool_purity(current_t=0)
        return state

    # -- bookkeeping helpers ----------------------------------------------

    def _violate(self, msg: str) -> None:
        if self.strict:
            raise InvariantViolation(msg)
        self.violations.append(msg)

    def _demand_saturated(self, j: int, current_t: int) -> bool:
        # Enough reserves for every agent arriving after the current one.
        return len(self.reserves[j]) >= self.n - current_t

    def _valid_pool_item(self, g: int) -> bool:
        return g in self.remaining and g not in self.reserved_items

    def _current_pool(self) -> list[int]:
        return [g for g in self.pool[self.pool_pos:] if self._valid_pool_item(g)]

    def _rebuild_pool(self) -> None:
        self.pool = [g for g in sorted(self.remaining) if g not in self.reserved_items]
        if self.rng is not None:
            self.rng.shuffle(self.pool)
        self.pool_pos = 0

    def _reserve_ref(self, bundle: Bundle, delta: int) -> None:
        cnt = self.bundle_refs.get(bundle, 0) + delta
        if cnt > 0:
            self.bundle_refs[bundle] = cnt
            self.reserved_items.update(bundle)
        else:
            self.bundle_refs.pop(bundle, None)
            self.reserved_items.difference_update(bundle)

    def _allocate(self, bundle: Bundle) -> None:
        self.remaining.difference_update(bundle)
        for j in range(self.k):
            self.remaining_value[j] -= value(self.values[j], bundle)

    # -- checks (quantified over demand-unsaturated positive-share types) --

    def _check_pool_purity(self, current_t: int) -> None:
        open_types = [j for j in self.check_types if not self._demand_saturated(j, current_t)]
        if not open_types:
            return
        for g in self._current_pool():
            for j in open_types:
                if self.values[j][g] >= self.thresholds[j]:
                    self._violate(
                        f"pool purity: item {g} worth {self.values[j][g]} to open type {j}")

    def _check_reserved_bound(self, bagvals: list[Fraction], current_t: int) -> None:
        for j in self.check_types:
            if not self._demand_saturated(j, current_t) and bagvals[j] > self.scales[j]:
                self._violate(
                    f"reserved bundle worth {bagvals[j]} > {self.scales[j]} to open type {j}")

    def _check_invariant(self) -> None:
        left = self.n - self.arrived
        ok = True
        for j in self.check_types:
            if len(self.reserves[j]) == left:
                continue
            if self.remaining_value[j] >= left * self.scales[j]:
                continue
            ok = False
            self._violate(
                f"invariant: type {j} has {len(self.reserves[j])} reserves and remaining "
                f"value {self.remaining_value[j]} with {left} agents left")
        if self.trace is not None:
            self.trace.append({"event": "invariantCheck", "agentsLeft": left, "ok": ok,
                               "reserveSizes": [len(dq) for dq in self.reserves],
                               "remainingValue": [str(v) for v in self.remaining_value]})

    # -- the per-arrival step ----------------------------------------------

    def _fill_bag(self) -> tuple[list[int], list[Fraction], list[int]]:
        bag: list[int] = []
        vals = [Fraction(0)] * self.k
        while self.pool_pos < len(self.pool):
            g = self.pool[self.pool_pos]
            self.pool_pos += 1
            if not self._valid_pool_item(g):
                continue
            bag.append(g)
            for j in range(self.k):
                vals[j] += self.values[j][g]
            claimants = [j for j in sorted(self.unsaturated) if vals[j] >= self.thresholds[j]]
            if claimants:
                return bag, vals, claimants
        return bag, vals, []


def preprocess(
    norm: NormalizedInstance,
    *,
    check: bool = True,
    strict: bool = True,
    rng: random.Random | None = None,
    trace: bool = False,
) -> TentativeState:
    """High-valued-item preprocessing on a normalized instance."""
    k = norm.k_types
    return TentativeState.create(
        norm.base.type_values,
        range(norm.m_items),
        norm.n_agents,
        thresholds=tuple(Fraction(1, k) for _ in range(k)),
        scales=tuple(Fraction(1) for _ in range(k)),
        check_types=tuple(i for i in range(k) if i not in norm.zero_mms_types),
        check=check,
        strict=strict,
        rng=rng,
        trace=trace,
    )


def step_adversarial(state: TentativeState, arrived_type: int) -> Bundle:
    """Serve one arriving agent of the given type; returns her bundle.

    Raises :class:`PoolExhausted` if bag filling runs dry before any type
    still marked unsaturated claims a bag, which the maintained invariant
    rules out on conforming inputs.
    """
    if state.arrived >= state.n:
        raise InputError("all agents already arrived")
    i = arrived_type
    if not 0 <= i < state.k:
        raise InputError(f"type id {i} out of range")
    t = state.arrived + 1
    allocated: Bundle

    if state.reserves[i]:
        idx = state.rng.randrange(len(state.reserves[i])) if state.rng is not None else 0
        allocated = state.reserves[i][idx]
        for j in range(state.k):
            before = len(state.reserves[j])
            state.reserves[j] = deque(b for b in state.reserves[j] if b != allocated)
            for _ in range(before - len(state.reserves[j])):
                state._reserve_ref(allocated, -1)
        state._allocate(allocated)
        if state.trace is not None:
            state.trace.append({"event": "serveReserve", "agent": t, "type": i,
                                "items": list(allocated.items),
                                "reserveSizes": [len(dq) for dq in state.reserves],
                                "remaining": len(state.remaining)})
    else:
        while True:
            bag, bagvals, claimants = state._fill_bag()
            if not claimants:
                # put the partial bag back in play for later rebuilds
                state._rebuild_pool()
                raise PoolExhausted(
                    f"agent {t} of type {i}: pool exhausted before any claim")
            if bagvals[i] >= state.thresholds[i]:
                allocated = Bundle(tuple(bag))
                state._allocate(allocated)
                if state.trace is not None:
                    state.trace.append({"event": "serveBag", "agent": t, "type": i,
                                        "items": list(allocated.items),
                                        "reserveSizes": [len(dq) for dq in state.reserves],
                                        "remaining": len(state.remaining)})
                break
            bundle = Bundle(tuple(bag))
            for j in claimants:
                state.reserves[j].append(bundle)
                state._reserve_ref(bundle, +1)
                if len(state.reserves[j]) >= state.n - t:
                    state.unsaturated.discard(j)
            if state.trace is not None:
                state.trace.append({"event": "reserve", "agent": t, "for": claimants,
                                    "items": list(bundle.items),
                                    "reserveSizes": [len(dq) for dq in state.reserves],
                                    "unsaturated": sorted(state.unsaturated)})
            if state.check:
                state._check_pool_purity(current_t=t)
                state._check_reserved_bound(bagvals, current_t=t)

    state.arrived = t
    dirty = False
    for j in range(state.k):
        while len(state.reserves[j]) > state.n - t:
            if state.rng is not None:
                pick = state.rng.randrange(len(state.reserves[j]))
                dropped = state.reserves[j][pick]
                del state.reserves[j][pick]
            else:
                dropped = state.reserves[j].pop()  # most recently added
            state._reserve_ref(dropped, -1)
            if dropped not in state.bundle_refs:
                dirty = True
            if state.trace is not None:
                state.trace.append({"event": "release", "type": j, "items": list(dropped.items)})
    if dirty:
        state._rebuild_pool()
    if state.check:
        state._check_invariant()
    return allocated


def run_adversarial(
    norm: NormalizedInstance,
    arrivals: Iterable[int],
    *,
    alpha: Fraction | None = None,
    check: bool = True,
    strict: bool = True,
    rng: random.Random | None = None,
    trace: bool = False,
) -> tuple[Allocation, TrialReport]:
    """Run the full online allocation for one arrival sequence.

    Every agent of a positive-share type is guaranteed a bundle worth at
    least 1/k of her (normalized) share; the report's success verdict is
    taken at ``alpha`` (default 1/k).
    """
    n, k = norm.n_agents, norm.k_types
    seq = list(arrivals)
    if len(seq) != n:
        raise InputError(f"arrival sequence has {len(seq)} types, expected {n}")
    alpha = as_fraction(alpha) if alpha is not None else Fraction(1, k)
    state = preprocess(norm, check=check, strict=strict, rng=rng, trace=trace)
    flags: list[str] = []
    if k == 1:
        flags.append("k1Degenerate")
    entries = []
    reason = FailureReason.NONE
    for agent, ti in enumerate(seq):
        try:
            bundle = step_adversarial(state, ti)
        except PoolExhausted:
            if strict:
                raise
            bundle = EMPTY_BUNDLE
            state.arrived += 1
            if reason is FailureReason.NONE:
                reason = FailureReason.POOL_EXHAUSTED
        entries.append((agent, ti, bundle))
    allocation = Allocation(tuple(entries))
    ratios = [
        Fraction(1) if ti in norm.zero_mms_types else value(norm.base.type_values[ti], b)
        for _, ti, b in entries
    ]
    details = {"violations": list(state.violations)} if state.violations else None
    report = TrialReport.build(ratios, alpha, reason, tuple(flags), details, state.trace)
    return allocation, report


# -- the adaptive lower-bound adversary ------------------------------------


def tentative_policy(construction) -> Callable[[int], Bundle]:
    """The reservation allocator itself as an online policy for the
    lower-bound game (run on the construction's normalized view)."""
    norm = construction.normalized()
    state = preprocess(norm, check=True, strict=True)
    return lambda type_id: step_adversarial(state, type_id)


def greedy_policy(construction) -> Callable[[int], Bundle]:
    """Baseline that grabs the best available items up to the arriving
    type's full share."""
    inst = construction.instance
    available = set(range(inst.m_items))

    def serve(type_id: int) -> Bundle:
        vals = inst.type_values[type_id]
        target = construction.declared_mms[type_id]
        picked: list[int] = []
        total = Fraction(0)
        for g in sorted(available, key=lambda g: (-vals[g], g)):
            if total >= target or vals[g] == 0:
                break
            picked.append(g)
            total += vals[g]
        available.difference_update(picked)
        return Bundle(tuple(picked))

    return serve


def adaptive_lower_bound_adversary(
    k: int,
    n: int,
    policy_factory: Callable[[object], Callable[[int], Bundle]],
) -> TrialReport:
    """Play the binary hard instance against any online policy.

    The first agent is the type that values everything.  If her bundle holds
    two items of one block of n consecutive items, all remaining agents are
    of the type valuing exactly that block; if it holds items of two blocks,
    they are of the half-block pair type covering both; with at most one item
    her own ratio is already at most 1/floor(sqrt(k)/2).  Ratios are measured
    against the construction's true (unnormalized) shares.
    """
    from .generators import gen_lower_bound

    cons = gen_lower_bound(k, n)
    serve = policy_factory(cons)
    inst = cons.instance
    taken: dict[int, int] = {}
    entries: list[tuple[int, Bundle]] = []

    def receive(type_id: int) -> Bundle:
        b = serve(type_id)
        for g in b:
            if g >= inst.m_items:
                raise ValidationError(f"policy returned unknown item {g}")
            if g in taken:
                raise ValidationError(
                    f"policy reused item {g} (agents {taken[g]} and {len(entries)})")
            taken[g] = len(entries)
        entries.append((type_id, b))
        return b

    first = receive(0)
    by_interval: dict[int, list[int]] = {}
    for g in first:
        by_interval.setdefault(cons.interval_of(g), []).append(g)
    doubled = sorted(r for r, gs in by_interval.items() if len(gs) >= 2)
    if doubled:
        branch = "sameInterval"
        punished = cons.interval_types[doubled[0]]
    elif len(by_interval) >= 2:
        branch = "twoIntervals"
        l, r = sorted(by_interval)[:2]
        punished = cons.pair_types[(l, r, cons.half_of(min(by_interval[l])),
                                    cons.half_of(min(by_interval[r])))]
    else:
        branch = "tinyFirstBundle"
        punished = 0  # nothing to punish; the first agent is already capped
    for _ in range(n - 1):
        receive(punished)

    ratios = [
        value(inst.type_values[ti], b) / cons.declared_mms[ti] for ti, b in entries
    ]
    min_ratio = min(ratios)
    details = {
        "mu1": cons.mu1,
        "branch": branch,
        "punishedType": punished,
        "belowSqrtBound": below_sqrt_bound(min_ratio, k),
    }
    return TrialReport.build(ratios, Fraction(1, cons.mu1), details=details)


def below_sqrt_bound(min_ratio: Fraction, k: int) -> bool:
    """Exactly decide ``min_ratio < 2 / (sqrt(k) - 2)`` for k > 4."""
    if k <= 4:
        raise InputError("bound needs k > 4")
    # min_ratio * (sqrt(k) - 2) < 2  <=>  min_ratio * sqrt(k) < 2 + 2*min_ratio
    return mul_sqrt_lt(min_ratio, k, 2 + 2 * as_fraction(min_ratio))
