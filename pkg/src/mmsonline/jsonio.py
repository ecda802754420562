"""JSON (de)serialization.

Rationals travel as ``"num/den"`` strings so nothing is ever rounded.  The
instance schema is::

    { "n": int, "m": int, "types": [ [ "num/den", ... ] x k ],
      "names": [str]            (optional)
      "mms": [ "num/den", ... ]                 (optional, with "witnesses")
      "witnesses": [ [ [item, ...] x n ] x k ]  (optional: share partitions) }

The optional mms/witnesses pair lets generated constructions ship their
known share partitions, so runs on them never need the exact solver.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .core import (
    Allocation,
    Bundle,
    InputError,
    Instance,
    NormalizedInstance,
    TrialReport,
    TypeDistribution,
    as_fraction,
)


def frac_to_str(x: Fraction) -> str:
    x = as_fraction(x)
    return f"{x.numerator}/{x.denominator}"


def frac_from_str(s) -> Fraction:
    try:
        return as_fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad rational {s!r}") from exc


def instance_to_obj(instance: Instance, norm: NormalizedInstance | None = None) -> dict:
    obj: dict[str, Any] = {
        "n": instance.n_agents,
        "m": instance.m_items,
        "types": [[frac_to_str(v) for v in row] for row in instance.type_values],
    }
    if instance.type_names is not None:
        obj["names"] = list(instance.type_names)
    if norm is not None:
        obj["mms"] = [frac_to_str(v) for v in norm.original_mms]
        obj["witnesses"] = [[list(b.items) for b in part] for part in norm.witness_partitions]
        if norm.zero_mms_types:
            obj["zeroMmsTypes"] = sorted(norm.zero_mms_types)
    return obj


def instance_from_obj(obj: dict) -> Instance:
    try:
        rows = tuple(tuple(frac_from_str(v) for v in row) for row in obj["types"])
        inst = Instance(int(obj["n"]), rows, tuple(obj["names"]) if "names" in obj else None)
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed instance object: {exc}") from exc
    if "m" in obj and int(obj["m"]) != inst.m_items:
        raise InputError("declared m disagrees with the value rows")
    return inst


def normalized_from_obj(obj: dict) -> NormalizedInstance | None:
    """The embedded normalized view, if the object carries share partitions."""
    if "mms" not in obj or "witnesses" not in obj:
        return None
    inst = instance_from_obj(obj)
    witnesses = tuple(
        tuple(Bundle(tuple(b)) for b in part) for part in obj["witnesses"]
    )
    mms = tuple(frac_from_str(v) for v in obj["mms"])
    zero = frozenset(obj.get("zeroMmsTypes", ()))
    return NormalizedInstance(inst, mms, witnesses, zero)


def distribution_to_obj(dist: TypeDistribution) -> dict:
    return {"probs": [frac_to_str(p) for p in dist.original_probs()]}


def distribution_from_obj(obj: dict) -> TypeDistribution:
    try:
        return TypeDistribution.from_probs([frac_from_str(p) for p in obj["probs"]])
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed distribution object: {exc}") from exc


def sequence_to_obj(seq) -> dict:
    return {"sequence": [int(t) for t in seq]}


def sequence_from_obj(obj: dict) -> list[int]:
    try:
        return [int(t) for t in obj["sequence"]]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed arrival sequence object: {exc}") from exc


def allocation_to_obj(allocation: Allocation) -> dict:
    return {
        "entries": [
            {"agent": a, "type": t, "items": list(b.items)} for a, t, b in allocation.entries
        ]
    }


def allocation_from_obj(obj: dict) -> Allocation:
    entries = tuple(
        (int(e["agent"]), int(e["type"]), Bundle(tuple(e["items"]))) for e in obj["entries"]
    )
    return Allocation(entries)


def report_to_obj(report: TrialReport) -> dict:
    obj: dict[str, Any] = {
        "perAgentRatio": [frac_to_str(r) for r in report.per_agent_ratio],
        "minRatio": frac_to_str(report.min_ratio),
        "alpha": frac_to_str(report.alpha),
        "succeededAtAlpha": report.succeeded_at_alpha,
        "failureReason": report.failure_reason.value,
    }
    if report.flags:
        obj["flags"] = list(report.flags)
    if report.details is not None:
        obj["details"] = report.details
    if report.step_trace is not None:
        obj["trace"] = report.step_trace
    return obj


def dump(obj: dict, path: str | Path) -> None:
    Path(path).write_text(canonical_json(obj) + "\n")


def load(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {path}: {exc}") from exc


def canonical_json(obj) -> str:
    """Deterministic rendering: sorted keys, no whitespace, no timestamps."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
