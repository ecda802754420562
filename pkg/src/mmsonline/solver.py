"""Exact maximin-share solver.

``mms_exact`` is a branch-and-bound over item-to-bundle assignments with
symmetry breaking, a longest-processing-time (LPT) incumbent, and the
average-value upper bound.  ``mms_brute_force`` is the independent oracle:
plain exhaustive enumeration, kept free of any pruning the solver uses.

Values are scaled to integers by the common denominator before searching;
that is still exact arithmetic, just faster than Fraction in the hot loop.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from .core import Bundle, CapacityError, InputError, MmsResult, as_fraction, value

DEFAULT_ITEM_CAP = 24
DEFAULT_BUNDLE_CAP = 8
BRUTE_ITEM_CAP = 12
BRUTE_BUNDLE_CAP = 5
_MEMO_LIMIT = 2_000_000


def _scaled(valuation: Sequence[Fraction]) -> tuple[list[int], int]:
    vals = [as_fraction(v) for v in valuation]
    if any(v < 0 for v in vals):
        raise InputError("negative value")
    den = math.lcm(*(v.denominator for v in vals)) if vals else 1
    return [v.numerator * (den // v.denominator) for v in vals], den


def lpt_partition(valuation: Sequence[Fraction], n: int) -> list[list[int]]:
    """Greedy longest-processing-time split into n bundles (item ids)."""
    if n < 1:
        raise InputError("need at least one bundle")
    ints, _ = _scaled(valuation)
    order = sorted(range(len(ints)), key=lambda g: (-ints[g], g))
    loads = [0] * n
    bundles: list[list[int]] = [[] for _ in range(n)]
    for g in order:
        j = min(range(n), key=lambda j: (loads[j], j))
        loads[j] += ints[g]
        bundles[j].append(g)
    return bundles


def mms_bounds(valuation: Sequence[Fraction], n: int) -> tuple[Fraction, Fraction]:
    """[LPT min-bundle, v(M)/n] bracket around the true share."""
    vals = [as_fraction(v) for v in valuation]
    bundles = lpt_partition(vals, n)
    lower = min(value(vals, Bundle(tuple(b))) for b in bundles)
    upper = sum(vals, Fraction(0)) / n
    return lower, upper


def mms_brute_force(valuation: Sequence[Fraction], n: int) -> MmsResult:
    """Exhaustive oracle: try every assignment of items to n labeled bundles.

    The only shortcut is pinning item 0 to bundle 0, which discards exact
    copies of each partition under bundle relabeling.  Limits: m <= 12,
    n <= 5.
    """
    if n < 1:
        raise InputError("need at least one bundle")
    m = len(valuation)
    if m > BRUTE_ITEM_CAP or n > BRUTE_BUNDLE_CAP:
        raise CapacityError(f"brute force capped at m<={BRUTE_ITEM_CAP}, n<={BRUTE_BUNDLE_CAP}")
    ints, den = _scaled(valuation)
    if m == 0:
        return MmsResult(Fraction(0), tuple(Bundle(()) for _ in range(n)), nodes=1)

    loads = [0] * n
    assign = [0] * m
    best = -1
    best_assign: list[int] = []
    nodes = 0

    def rec(idx: int) -> None:
        nonlocal best, best_assign, nodes
        nodes += 1
        if idx == m:
            mn = min(loads)
            if mn > best:
                best = mn
                best_assign = assign.copy()
            return
        choices = range(1) if idx == 0 else range(n)
        for j in choices:
            loads[j] += ints[idx]
            assign[idx] = j
            rec(idx + 1)
            loads[j] -= ints[idx]

    rec(0)
    bundles: list[list[int]] = [[] for _ in range(n)]
    for g, j in enumerate(best_assign):
        bundles[j].append(g)
    witness = tuple(Bundle(tuple(b)) for b in bundles)
    return MmsResult(Fraction(best, den), witness, nodes=nodes)


def mms_exact(
    valuation: Sequence[Fraction],
    n: int,
    *,
    item_cap: int = DEFAULT_ITEM_CAP,
    bundle_cap: int = DEFAULT_BUNDLE_CAP,
    on_overflow: str = "raise",
) -> MmsResult:
    """Exact share via branch-and-bound.

    Items are branched in non-increasing value order (ties by index); bundles
    with equal current loads are interchangeable and only the first is tried.
    The incumbent starts from the LPT split, nodes are pruned against
    ``min(load) + remaining`` and the global ``total/n`` cap, and states are
    memoized by (depth, sorted load profile).

    Above the caps, ``on_overflow="bounds"`` returns the exact=False
    [LPT, v(M)/n] bracket instead of raising.
    """
    if n < 1:
        raise InputError("need at least one bundle")
    m = len(valuation)
    if m > item_cap or n > bundle_cap:
        if on_overflow == "bounds":
            lower, upper = mms_bounds(valuation, n)
            witness = tuple(Bundle(tuple(b)) for b in lpt_partition(valuation, n))
            return MmsResult(lower, witness, exact=False, upper_bound=upper, nodes=0)
        raise CapacityError(
            f"exact solver capped at m<={item_cap}, n<={bundle_cap} (got m={m}, n={n}); "
            "pass on_overflow='bounds' for a bracket")
    ints, den = _scaled(valuation)
    if m == 0:
        return MmsResult(Fraction(0), tuple(Bundle(()) for _ in range(n)), nodes=1)
    if n == 1:
        return MmsResult(Fraction(sum(ints), den), (Bundle(tuple(range(m))),), nodes=1)

    items = sorted((g for g in range(m) if ints[g] > 0), key=lambda g: (-ints[g], g))
    zeros = [g for g in range(m) if ints[g] == 0]
    mm = len(items)
    suffix = [0] * (mm + 1)
    for i in range(mm - 1, -1, -1):
        suffix[i] = suffix[i + 1] + ints[items[i]]
    total = suffix[0]
    ub_global = total // n

    # LPT incumbent (zero-valued items stripped; they are re-attached at the end)
    lpt = lpt_partition(valuation, n)
    best = min(sum(ints[g] for g in b) for b in lpt)
    best_bundles = [[g for g in b if ints[g] > 0] for b in lpt]
    nodes = 1

    loads = [0] * n
    current: list[list[int]] = [[] for _ in range(n)]
    seen: set[tuple] = set()

    class _Done(Exception):
        pass

    def rec(idx: int) -> None:
        nonlocal best, best_bundles, nodes
        nodes += 1
        if idx == mm:
            mn = min(loads)
            if mn > best:
                best = mn
                best_bundles = [b.copy() for b in current]
                if best >= ub_global:
                    raise _Done
            return
        if min(loads) + suffix[idx] <= best:
            return
        key = (idx, tuple(sorted(loads)))
        if key in seen:
            return
        if len(seen) < _MEMO_LIMIT:
            seen.add(key)
        g = items[idx]
        v = ints[g]
        tried: set[int] = set()
        for j in sorted(range(n), key=lambda j: loads[j]):
            if loads[j] in tried:
                continue
            tried.add(loads[j])
            loads[j] += v
            current[j].append(g)
            rec(idx + 1)
            loads[j] -= v
            current[j].pop()

    if best < ub_global:
        try:
            rec(0)
        except _Done:
            pass

    bundles = [sorted(b) for b in best_bundles]
    bundles[0].extend(zeros)
    witness = tuple(Bundle(tuple(b)) for b in bundles)
    return MmsResult(Fraction(best, den), witness, nodes=nodes)


def alpha_mms_partition(valuation: Sequence[Fraction], n: int, alpha: Fraction) -> tuple[Bundle, ...]:
    """A partition whose every bundle is worth >= alpha * share.

    The exact witness partition already satisfies this for any alpha <= 1.
    """
    alpha = as_fraction(alpha)
    if not 0 <= alpha <= 1:
        raise InputError("alpha must lie in [0, 1]")
    return mms_exact(valuation, n).witness
