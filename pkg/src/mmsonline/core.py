"""Exact-arithmetic data model: instances, bundles, allocations, type
distributions, normalization, and ex-post verification.

Every valuation quantity is a ``fractions.Fraction``; all threshold
comparisons in this package are exact.  Floats are confined to statistics
aggregation in the harness.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Sequence


class MmsOnlineError(Exception):
    """Base class for library errors."""


class InputError(MmsOnlineError, ValueError):
    """Malformed or out-of-contract input."""


class ValidationError(InputError):
    """A produced object breaks a structural contract (e.g. overlapping bundles)."""


class CapacityError(MmsOnlineError):
    """Instance too large for the exact solver configuration."""


class InvariantViolation(MmsOnlineError):
    """A run broke an invariant that the algorithms are proven to maintain."""


class PoolExhausted(InvariantViolation):
    """Bag filling ran out of items before any eligible type claimed a bag."""


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise InputError(f"refusing float value {x!r}; pass int, Fraction or 'num/den' string")
    if isinstance(x, str):
        num, _, den = x.partition("/")
        return Fraction(int(num), int(den)) if den else Fraction(int(num))
    return Fraction(x)


@dataclass(frozen=True)
class Bundle:
    """An immutable set of item indices, stored sorted."""

    items: tuple[int, ...] = ()

    def __post_init__(self):
        norm = tuple(sorted(set(int(g) for g in self.items)))
        if any(g < 0 for g in norm):
            raise InputError("negative item index")
        object.__setattr__(self, "items", norm)

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __contains__(self, g):
        return g in self.items

    def __bool__(self):
        return bool(self.items)


EMPTY_BUNDLE = Bundle(())

Valuation = tuple[Fraction, ...]


def value(valuation: Sequence[Fraction], bundle: Bundle) -> Fraction:
    """Additive value of a bundle; the empty bundle is worth 0."""
    total = Fraction(0)
    m = len(valuation)
    for g in bundle:
        if g >= m:
            raise InputError(f"item index {g} out of range (m={m})")
        total += valuation[g]
    return total


@dataclass(frozen=True)
class Instance:
    """``n_agents`` sequentially arriving agents, one of ``k`` known additive
    valuation types each, over ``m_items`` indivisible items."""

    n_agents: int
    type_values: tuple[Valuation, ...]
    type_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n_agents < 1:
            raise InputError("need at least one agent")
        rows = tuple(tuple(as_fraction(v) for v in row) for row in self.type_values)
        if not rows:
            raise InputError("need at least one type")
        m = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != m:
                raise InputError(f"type {i} has {len(row)} values, expected {m}")
            if any(v < 0 for v in row):
                raise InputError(f"type {i} has a negative value")
        object.__setattr__(self, "type_values", rows)
        if self.type_names is not None:
            names = tuple(str(s) for s in self.type_names)
            if len(names) != len(rows):
                raise InputError("type_names length mismatch")
            object.__setattr__(self, "type_names", names)

    @property
    def k_types(self) -> int:
        return len(self.type_values)

    @property
    def m_items(self) -> int:
        return len(self.type_values[0])


@dataclass(frozen=True)
class MmsResult:
    """Maximin-share value of one valuation over ``n`` bundles, with the
    partition attaining it.  ``exact=False`` marks a bound-only bracket."""

    value: Fraction
    witness: tuple[Bundle, ...]
    exact: bool = True
    upper_bound: Fraction | None = None
    nodes: int = 0


@dataclass(frozen=True)
class NormalizedInstance:
    """An instance rescaled so every positive-share type has maximin share
    exactly 1 and total value exactly ``n``; zero-share types are recorded
    and left unscaled."""

    base: Instance
    original_mms: tuple[Fraction, ...]
    witness_partitions: tuple[tuple[Bundle, ...], ...]
    zero_mms_types: frozenset[int] = frozenset()

    def __post_init__(self):
        inst = self.base
        n, m, k = inst.n_agents, inst.m_items, inst.k_types
        if len(self.original_mms) != k or len(self.witness_partitions) != k:
            raise ValidationError("per-type metadata length mismatch")
        object.__setattr__(self, "original_mms", tuple(as_fraction(v) for v in self.original_mms))
        object.__setattr__(self, "zero_mms_types", frozenset(self.zero_mms_types))
        for i in range(k):
            part = self.witness_partitions[i]
            if len(part) != n:
                raise ValidationError(f"type {i}: witness has {len(part)} bundles, expected {n}")
            seen: set[int] = set()
            for b in part:
                for g in b:
                    if g >= m or g in seen:
                        raise ValidationError(f"type {i}: witness is not a partition of the items")
                    seen.add(g)
            if len(seen) != m:
                raise ValidationError(f"type {i}: witness does not cover all items")
            row = inst.type_values[i]
            if i in self.zero_mms_types:
                if self.original_mms[i] != 0:
                    raise ValidationError(f"type {i} flagged zero-share but has positive share")
                continue
            if self.original_mms[i] <= 0:
                raise ValidationError(f"type {i} has nonpositive share but is not flagged")
            for b in part:
                if value(row, b) != 1:
                    raise ValidationError(f"type {i}: witness bundle value != 1 after rescaling")
            if any(v > 1 for v in row):
                raise ValidationError(f"type {i}: item value above 1 after rescaling")

    @property
    def n_agents(self) -> int:
        return self.base.n_agents

    @property
    def m_items(self) -> int:
        return self.base.m_items

    @property
    def k_types(self) -> int:
        return self.base.k_types


def normalize(instance: Instance, mms_solver: Callable[[Sequence[Fraction], int], MmsResult] | None = None) -> NormalizedInstance:
    """Rescale each type by its maximin-share partition.

    For a type with share > 0 and partition bundle values ``v_i(P_j)``, every
    item ``g`` in ``P_j`` is rescaled to ``v_i(g) / v_i(P_j)``, making each
    bundle worth exactly 1 and the grand total exactly ``n``.  Types whose
    share is 0 are left unscaled and flagged.

    ``mms_solver`` maps (valuation, n) to an :class:`MmsResult`; by default
    the exact branch-and-bound solver is used, so the instance must be within
    its size caps.
    """
    if mms_solver is None:
        from .solver import mms_exact as mms_solver  # local import avoids a cycle
    n = instance.n_agents
    rows: list[Valuation] = []
    mms_values: list[Fraction] = []
    witnesses: list[tuple[Bundle, ...]] = []
    zero_types: set[int] = set()
    for i, row in enumerate(instance.type_values):
        res = mms_solver(row, n)
        if not res.exact:
            raise CapacityError(f"type {i}: solver returned a bound-only result")
        mms_values.append(res.value)
        witnesses.append(tuple(res.witness))
        if res.value == 0:
            zero_types.add(i)
            rows.append(row)
            continue
        scaled = list(row)
        for b in res.witness:
            bv = value(row, b)
            for g in b:
                scaled[g] = row[g] / bv
        rows.append(tuple(scaled))
    base = Instance(n, tuple(rows), instance.type_names)
    return NormalizedInstance(base, tuple(mms_values), tuple(witnesses), frozenset(zero_types))


def universally_high_valued(norm: NormalizedInstance, alpha: Fraction) -> Bundle:
    """Items every type values at >= alpha, ascending."""
    alpha = as_fraction(alpha)
    rows = norm.base.type_values
    return Bundle(tuple(g for g in range(norm.m_items) if all(row[g] >= alpha for row in rows)))


@dataclass(frozen=True)
class Allocation:
    """Irrevocable per-agent grants: (agent_index, type_id, bundle)."""

    entries: tuple[tuple[int, int, Bundle], ...]

    def __post_init__(self):
        prev = -1
        seen: dict[int, int] = {}
        for agent, _type_id, bundle in self.entries:
            if agent <= prev:
                raise ValidationError("agent indices must be strictly increasing")
            prev = agent
            for g in bundle:
                if g in seen:
                    raise ValidationError(
                        f"item {g} allocated to both agent {seen[g]} and agent {agent}")
                seen[g] = agent

    def bundles(self) -> list[Bundle]:
        return [b for _, _, b in self.entries]


@dataclass(frozen=True)
class TypeDistribution:
    """Arrival distribution over the k types, stored sorted non-increasing
    with the permutation back to original type ids."""

    probs: tuple[Fraction, ...]
    order: tuple[int, ...]

    def __post_init__(self):
        probs = tuple(as_fraction(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if sum(probs) != 1:
            raise InputError("probabilities must sum to exactly 1")
        if any(p < 0 for p in probs):
            raise InputError("probabilities must be nonnegative")
        if any(probs[i] < probs[i + 1] for i in range(len(probs) - 1)):
            raise InputError("probs must be sorted non-increasing")
        if sorted(self.order) != list(range(len(probs))):
            raise InputError("order must be a permutation of type ids")

    @classmethod
    def from_probs(cls, probs: Sequence) -> "TypeDistribution":
        """Sort the given per-type probabilities, remembering original ids."""
        vals = [as_fraction(p) for p in probs]
        ranked = sorted(range(len(vals)), key=lambda i: (-vals[i], i))
        return cls(tuple(vals[i] for i in ranked), tuple(ranked))

    @property
    def k(self) -> int:
        return len(self.probs)

    def rank_of(self, original_type: int) -> int:
        return self.order.index(original_type)

    def original_probs(self) -> tuple[Fraction, ...]:
        out = [Fraction(0)] * self.k
        for rank, orig in enumerate(self.order):
            out[orig] = self.probs[rank]
        return tuple(out)


class FailureReason(str, Enum):
    NONE = "none"
    EMPTY_RESERVE = "emptyReserve"
    POOL_EXHAUSTED = "poolExhausted"
    VALUE_BELOW_ALPHA = "valueBelowAlpha"


@dataclass
class TrialReport:
    """Outcome of one online run: per-agent achieved ratios against the
    (normalized) maximin share, the minimum, and the success verdict."""

    per_agent_ratio: tuple[Fraction, ...]
    min_ratio: Fraction
    alpha: Fraction
    succeeded_at_alpha: bool
    failure_reason: FailureReason = FailureReason.NONE
    flags: tuple[str, ...] = ()
    details: dict | None = None
    step_trace: list | None = None

    @classmethod
    def build(
        cls,
        ratios: Iterable[Fraction],
        alpha: Fraction,
        failure_reason: FailureReason = FailureReason.NONE,
        flags: tuple[str, ...] = (),
        details: dict | None = None,
        step_trace: list | None = None,
    ) -> "TrialReport":
        ratios = tuple(ratios)
        alpha = as_fraction(alpha)
        min_ratio = min(ratios) if ratios else Fraction(1)
        ok = all(r >= alpha for r in ratios)
        if not ok and failure_reason is FailureReason.NONE:
            failure_reason = FailureReason.VALUE_BELOW_ALPHA
        return cls(ratios, min_ratio, alpha, ok, failure_reason, tuple(flags), details, step_trace)


def verify_allocation(norm: NormalizedInstance, allocation: Allocation, alpha: Fraction) -> TrialReport:
    """Ex-post check of an allocation against the normalized shares.

    Each agent's ratio is her bundle's normalized value (the normalized share
    of a positive-share type is exactly 1); zero-share types get ratio 1 by
    convention since any bundle meets a zero target.  Success requires every
    ratio >= alpha, compared exactly; the boundary is inclusive.
    """
    alpha = as_fraction(alpha)
    m = norm.m_items
    k = norm.k_types
    ratios: list[Fraction] = []
    for _agent, type_id, bundle in allocation.entries:
        if not 0 <= type_id < k:
            raise ValidationError(f"type id {type_id} out of range")
        if any(g >= m for g in bundle):
            raise ValidationError("bundle references an item outside the instance")
        if type_id in norm.zero_mms_types:
            ratios.append(Fraction(1))
        else:
            ratios.append(value(norm.base.type_values[type_id], bundle))
    return TrialReport.build(ratios, alpha)
