"""Seeded Monte-Carlo experiment runner, prediction-error perturbation, and
report emission.

Every trial draws its randomness from named substreams of (master_seed,
trial_index), so aggregate reports are byte-identical regardless of the
parallelism level.  Failed trials are data; a broken run invariant aborts
the whole experiment with a reproducer.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import generators, jsonio
from .adversarial import run_adversarial
from .core import (
    InputError,
    Instance,
    InvariantViolation,
    NormalizedInstance,
    TrialReport,
    TypeDistribution,
    as_fraction,
    normalize,
    value,
)
from .generators import all_sequences, sample_arrivals
from .rng import substream, uniform_fraction
from .stochastic import run_known_d
from .unknown import run_unknown_d

ALGORITHMS = ("adversarial", "known-d", "unknown-d")


@dataclass(frozen=True)
class McConfig:
    """Picklable experiment description.

    Exactly one of ``instance_obj`` (a parsed instance JSON object, fixed
    across trials) or ``generator``/``generator_params`` (fresh instance per
    trial, seeded per trial) must be given.  Rationals travel as strings.
    """

    algorithm: str
    trials: int
    master_seed: int
    instance_obj: dict | None = None
    generator: str | None = None
    generator_params: dict | None = None
    fresh_instance_per_trial: bool = True
    dist: tuple[str, ...] | None = None         # known-d parameter / arrival law
    hidden_dist: tuple[str, ...] | None = None  # unknown-d arrival law (never shown)
    alpha: str | None = None
    eta: str | None = None
    epsilon: str | None = None
    c: str | None = None
    arrivals: str = "iid"                       # "iid" | "exhaustive"
    parallelism: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InputError(f"unknown algorithm {self.algorithm!r}")
        if (self.instance_obj is None) == (self.generator is None):
            raise InputError("give exactly one of instance_obj or generator")
        if self.arrivals not in ("iid", "exhaustive"):
            raise InputError("arrivals must be 'iid' or 'exhaustive'")

    def to_obj(self) -> dict:
        # parallelism is an execution detail, not experiment identity
        obj = {k: v for k, v in self.__dict__.items()
               if v is not None and k != "parallelism"}
        if self.dist is not None:
            obj["dist"] = list(self.dist)
        if self.hidden_dist is not None:
            obj["hidden_dist"] = list(self.hidden_dist)
        return obj


def _resolve_instance(config: McConfig, trial: int) -> NormalizedInstance:
    if config.instance_obj is not None:
        norm = jsonio.normalized_from_obj(config.instance_obj)
        if norm is None:
            norm = normalize(jsonio.instance_from_obj(config.instance_obj))
        return norm
    params = dict(config.generator_params or {})
    seed_key = trial if config.fresh_instance_per_trial else 0
    params.setdefault("seed", substream(config.master_seed, "instance", seed_key).randrange(2**48))
    gen = generators.GENERATORS[config.generator]
    out = gen(**params)
    if isinstance(out, tuple):  # generators returning (instance, distribution)
        out = out[0]
    if isinstance(out, NormalizedInstance):
        return out
    if isinstance(out, Instance):
        return normalize(out)
    raise InputError(f"generator {config.generator!r} returned {type(out).__name__}")


def _trial_arrivals(config: McConfig, norm: NormalizedInstance, trial: int) -> list[int]:
    n, k = norm.n_agents, norm.k_types
    if config.arrivals == "exhaustive":
        seqs = list(all_sequences(k, n))
        return list(seqs[trial])
    law = config.hidden_dist if config.algorithm == "unknown-d" else config.dist
    if law is None:
        raise InputError("iid arrivals need a distribution")
    dist = TypeDistribution.from_probs([as_fraction(p) for p in law])
    if dist.k != k:
        raise InputError("arrival distribution arity mismatch")
    return sample_arrivals(dist, n, substream(config.master_seed, "arrivals", trial))


def run_trial(config: McConfig, trial: int) -> dict:
    """One seeded trial; returns a flat JSON-able row."""
    norm = _resolve_instance(config, trial)
    seq = _trial_arrivals(config, norm, trial)
    alpha = as_fraction(config.alpha) if config.alpha else None
    eta = as_fraction(config.eta) if config.eta else None
    try:
        if config.algorithm == "adversarial":
            _, report = run_adversarial(norm, seq, alpha=alpha, check=True, strict=True)
        elif config.algorithm == "known-d":
            if config.dist is None:
                raise InputError("known-d needs dist")
            dist = TypeDistribution.from_probs([as_fraction(p) for p in config.dist])
            _, report = run_known_d(
                norm, dist, seq, alpha=alpha, eta=eta,
                epsilon=as_fraction(config.epsilon), check=True, strict=False)
        else:
            _, report = run_unknown_d(
                norm, seq, alpha=alpha, eta=eta, c=as_fraction(config.c),
                seed=substream(config.master_seed, "split", trial).randrange(2**48),
                check=True)
    except InvariantViolation as exc:
        raise InvariantViolation(
            f"{exc}; reproduce with master_seed={config.master_seed}, trial={trial}") from exc
    violations = _violation_count(report)
    return {
        "trial": trial,
        "seed": config.master_seed,
        "algorithm": config.algorithm,
        "n": norm.n_agents,
        "m": norm.m_items,
        "k": norm.k_types,
        "alpha": jsonio.frac_to_str(report.alpha),
        "minRatio": jsonio.frac_to_str(report.min_ratio),
        "success": report.succeeded_at_alpha,
        "failureReason": report.failure_reason.value,
        "flags": list(report.flags),
        "details": report.details or {},
        "violations": violations,
    }


def _violation_count(report: TrialReport) -> int:
    det = report.details or {}
    count = len(det.get("violations", ())) if isinstance(det.get("violations"), list) else 0
    sub = det.get("dispatch") or {}
    if isinstance(sub.get("violations"), list):
        count += len(sub["violations"])
    return count


@dataclass
class AggregateReport:
    config: dict
    rows: list[dict]
    success_rate: float
    failure_histogram: dict[str, int]
    invariant_violations: int
    min_ratio_overall: str
    mean_min_ratio: float
    quantiles: dict[str, float]

    def to_obj(self) -> dict:
        return {
            "config": self.config,
            "rows": self.rows,
            "successRate": self.success_rate,
            "failureHistogram": self.failure_histogram,
            "invariantViolations": self.invariant_violations,
            "minRatioOverall": self.min_ratio_overall,
            "meanMinRatio": self.mean_min_ratio,
            "quantiles": self.quantiles,
        }

    def canonical_json(self) -> str:
        return jsonio.canonical_json(self.to_obj())


def _mc_star(args: tuple[McConfig, int]) -> dict:
    return run_trial(*args)


def monte_carlo(config: McConfig) -> AggregateReport:
    """Run the experiment; deterministic for a fixed master seed at any
    parallelism level.  Any invariant violation aborts with a reproducer."""
    trials = config.trials
    if config.arrivals == "exhaustive":
        if config.instance_obj is None and config.fresh_instance_per_trial:
            raise InputError("exhaustive arrivals need a fixed instance")
        probe = _resolve_instance(config, 0)
        expected = probe.k_types ** probe.n_agents
        if trials not in (0, expected):
            raise InputError(f"exhaustive enumeration has {expected} sequences")
        trials = expected
    if config.parallelism > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            rows = list(pool.map(_mc_star, ((config, t) for t in range(trials)), chunksize=16))
    else:
        rows = [run_trial(config, t) for t in range(trials)]
    rows.sort(key=lambda r: r["trial"])

    for row in rows:
        if row["violations"]:
            raise InvariantViolation(
                f"trial {row['trial']} broke {row['violations']} invariant(s); "
                f"reproduce with master_seed={config.master_seed}, trial={row['trial']}")
    histogram: dict[str, int] = {}
    for row in rows:
        if not row["success"]:
            histogram[row["failureReason"]] = histogram.get(row["failureReason"], 0) + 1
    ratios = sorted(_ratio_float(row["minRatio"]) for row in rows)
    def q(p: float) -> float:
        if not ratios:
            return 0.0
        return ratios[min(len(ratios) - 1, int(p * (len(ratios) - 1)))]
    return AggregateReport(
        config=config.to_obj(),
        rows=rows,
        success_rate=(sum(1 for r in rows if r["success"]) / len(rows)) if rows else 0.0,
        failure_histogram=dict(sorted(histogram.items())),
        invariant_violations=0,
        min_ratio_overall=min((row["minRatio"] for row in rows), key=_ratio_float, default="1/1"),
        mean_min_ratio=(sum(ratios) / len(ratios)) if ratios else 0.0,
        quantiles={"p05": q(0.05), "p50": q(0.50), "p95": q(0.95)},
    )


def _ratio_float(s: str) -> float:
    num, den = s.split("/")
    return int(num) / int(den)


# -- prediction-error perturbation ------------------------------------------


def perturb(instance: Instance, beta: Fraction, seed: int) -> Instance:
    """Multiply every value by an independent seeded factor in [1/beta, beta].

    Factors are rational (drawn from a uniform grid), so the perturbed
    instance stays exact and satisfies v/beta <= v_perturbed <= v*beta
    entrywise by construction.
    """
    beta = as_fraction(beta)
    if beta < 1:
        raise InputError("beta must be at least 1")
    rng = substream(seed, "perturb")
    rows = []
    for row in instance.type_values:
        rows.append(tuple(v * uniform_fraction(rng, 1 / beta, beta) for v in row))
    return Instance(instance.n_agents, tuple(rows), instance.type_names)


def degradation_trial(
    algorithm: str,
    instance: Instance,
    beta: Fraction,
    seed: int,
    *,
    dist: TypeDistribution | None = None,
    alpha: Fraction | None = None,
    eta: Fraction | None = None,
    epsilon: Fraction | None = None,
    c: Fraction | None = None,
) -> dict:
    """Run one algorithm on the perturbed view of an instance and audit the
    exact degradation guarantee against the true values.

    Returns share brackets per type (beta * true >= perturbed >= true / beta)
    and, when the perturbed run met its claim level, whether every agent's
    true ratio reached alpha / beta**2.
    """
    beta = as_fraction(beta)
    true_norm = normalize(instance)
    perturbed = perturb(instance, beta, seed)
    pert_norm = normalize(perturbed)

    bracket_ok = True
    for i in range(instance.k_types):
        true_mms = true_norm.original_mms[i]
        pert_mms = pert_norm.original_mms[i]
        if not (beta * true_mms >= pert_mms >= true_mms / beta):
            bracket_ok = False

    n, k = instance.n_agents, instance.k_types
    if algorithm == "adversarial":
        alpha_run = alpha if alpha is not None else Fraction(1, k)
        if dist is not None:
            seq = sample_arrivals(dist, n, substream(seed, "arrivals"))
        else:
            rng = substream(seed, "arrivals")
            seq = [rng.randrange(k) for _ in range(n)]
        allocation, report = run_adversarial(pert_norm, seq, alpha=alpha_run, strict=True)
    elif algorithm == "known-d":
        alpha_run = alpha if alpha is not None else Fraction(1, 2 * (1 + as_fraction(eta)))
        seq = sample_arrivals(dist, n, substream(seed, "arrivals"))
        allocation, report = run_known_d(
            pert_norm, dist, seq, alpha=alpha_run, epsilon=epsilon, check=True)
    elif algorithm == "unknown-d":
        alpha_run = alpha if alpha is not None else Fraction(1, 2 * (1 + as_fraction(eta)))
        seq = sample_arrivals(dist, n, substream(seed, "arrivals"))
        allocation, report = run_unknown_d(
            pert_norm, seq, alpha=alpha_run, c=c, seed=seed, check=True)
    else:
        raise InputError(f"unknown algorithm {algorithm!r}")

    degraded_alpha = alpha_run / beta ** 2
    true_ratios = []
    for _agent, ti, bundle in allocation.entries:
        true_mms = true_norm.original_mms[ti]
        if true_mms == 0:
            true_ratios.append(Fraction(1))
        else:
            true_ratios.append(value(instance.type_values[ti], bundle) / true_mms)
    degradation_ok = (not report.succeeded_at_alpha) or all(
        r >= degraded_alpha for r in true_ratios)
    return {
        "bracketOk": bracket_ok,
        "perturbedSuccess": report.succeeded_at_alpha,
        "degradationOk": degradation_ok,
        "alpha": alpha_run,
        "degradedAlpha": degraded_alpha,
        "trueMinRatio": min(true_ratios) if true_ratios else Fraction(1),
    }


# -- report emission ----------------------------------------------------------

CSV_COLUMNS = ("trial", "seed", "algorithm", "n", "m", "k", "alpha",
               "minRatio", "success", "failureReason")


def emit_report(aggregate: AggregateReport, fmt: str, path: str | Path) -> None:
    if fmt == "json":
        Path(path).write_text(aggregate.canonical_json() + "\n")
    elif fmt == "csv":
        Path(path).write_text(render_csv(aggregate))
    else:
        raise InputError(f"unknown report format {fmt!r}")


def render_csv(aggregate: AggregateReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in aggregate.rows:
        writer.writerow([
            row["trial"], row["seed"], row["algorithm"], row["n"], row["m"], row["k"],
            row["alpha"], row["minRatio"],
            "true" if row["success"] else "false", row["failureReason"],
        ])
    return buf.getvalue()
