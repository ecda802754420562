"""Command-line interface.

Exit codes: 0 clean, 1 input error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import generators, harness, jsonio
from .adversarial import run_adversarial
from .core import (
    CapacityError,
    InputError,
    InvariantViolation,
    TypeDistribution,
    as_fraction,
    normalize,
)
from .generators import all_sequences, sample_arrivals
from .rng import substream
from .solver import mms_brute_force, mms_exact
from .stochastic import run_known_d
from .unknown import run_unknown_d


def _frac(s: str) -> Fraction:
    return as_fraction(s)


def _load_norm(path: str):
    obj = jsonio.load(path)
    norm = jsonio.normalized_from_obj(obj)
    if norm is None:
        norm = normalize(jsonio.instance_from_obj(obj))
    return norm


def _load_dist(path: str) -> TypeDistribution:
    return jsonio.distribution_from_obj(jsonio.load(path))


def _emit(obj: dict, out: str | None) -> None:
    text = jsonio.canonical_json(obj)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_gen(args) -> int:
    kind = args.kind
    if kind == "example1":
        inst, _ = generators.gen_example1(args.m)
        _emit(jsonio.instance_to_obj(inst), args.out)
    elif kind == "adv-counter":
        norm = generators.gen_adv_counterexample(args.n, _frac(args.eps))
        _emit(jsonio.instance_to_obj(norm.base, norm), args.out)
    elif kind == "lower-bound":
        cons = generators.gen_lower_bound(args.k, args.n)
        obj = jsonio.instance_to_obj(cons.instance)
        obj["mms"] = [jsonio.frac_to_str(v) for v in cons.declared_mms]
        obj["witnesses"] = [[list(b.items) for b in part] for part in cons.witnesses]
        _emit(obj, args.out)
    elif kind == "tight-half":
        norm = generators.gen_tightness_half(args.k, args.n, _frac(args.eps))
        _emit(jsonio.instance_to_obj(norm.base, norm), args.out)
    elif kind == "tight-pk":
        norm, dist = generators.gen_tightness_pk(args.k, args.n)
        _emit(jsonio.instance_to_obj(norm.base, norm), args.out)
        if args.dist_out:
            with open(args.dist_out, "w") as fh:
                fh.write(jsonio.canonical_json(jsonio.distribution_to_obj(dist)) + "\n")
    elif kind == "random":
        inst = generators.gen_random(args.n, args.m, args.k, args.model, args.seed)
        _emit(jsonio.instance_to_obj(inst), args.out)
    elif kind == "normalized-random":
        norm = generators.gen_normalized_random(args.n, args.m, args.k, args.seed)
        _emit(jsonio.instance_to_obj(norm.base, norm), args.out)
    else:  # pragma: no cover - argparse restricts choices
        raise InputError(f"unknown generator {kind!r}")
    return 0


def _cmd_mms(args) -> int:
    obj = jsonio.load(args.instance)
    inst = jsonio.instance_from_obj(obj)
    if not 0 <= args.type < inst.k_types:
        raise InputError("type index out of range")
    valuation = inst.type_values[args.type]
    solver = mms_brute_force if args.brute_force else mms_exact
    res = solver(valuation, args.bundles)
    out = {
        "value": jsonio.frac_to_str(res.value),
        "exact": res.exact,
        "witness": [list(b.items) for b in res.witness],
        "nodes": res.nodes,
    }
    if res.upper_bound is not None:
        out["upperBound"] = jsonio.frac_to_str(res.upper_bound)
    _emit(out, args.out)
    return 0


def _cmd_run(args) -> int:
    norm = _load_norm(args.instance)
    n, k = norm.n_agents, norm.k_types
    if args.algorithm == "adversarial":
        if args.enumerate:
            worst = None
            for seq in all_sequences(k, n):
                _, rep = run_adversarial(norm, seq, alpha=_frac(args.alpha) if args.alpha else None,
                                         check=True, strict=True)
                if worst is None or rep.min_ratio < worst.min_ratio:
                    worst = rep
            _emit(jsonio.report_to_obj(worst), args.out)
            return 0
        if args.arrivals:
            seq = jsonio.sequence_from_obj(jsonio.load(args.arrivals))
        else:
            raise InputError("adversarial run needs --arrivals or --enumerate")
        _, rep = run_adversarial(norm, seq, alpha=_frac(args.alpha) if args.alpha else None,
                                 check=True, strict=True, trace=args.trace)
        if args.trace:
            for event in rep.step_trace or ():
                print(jsonio.canonical_json(event))  # one line per step
        _emit(jsonio.report_to_obj(rep), args.out)
        return 0

    if args.trials > 1:
        # seeded repetition: route through the experiment runner
        instance_obj = jsonio.load(args.instance)
        law = tuple(jsonio.distribution_to_obj(_load_dist(args.dist))["probs"]) if args.dist else None
        config = harness.McConfig(
            algorithm=args.algorithm, trials=args.trials, master_seed=args.seed,
            instance_obj=instance_obj,
            dist=law if args.algorithm == "known-d" else None,
            hidden_dist=law if args.algorithm == "unknown-d" else None,
            alpha=args.alpha, eta=args.eta,
            epsilon=args.epsilon if args.algorithm == "known-d" else None,
            c=args.c if args.algorithm == "unknown-d" else None)
        agg = harness.monte_carlo(config)
        if args.out:
            harness.emit_report(agg, "json", args.out)
        else:
            print(agg.canonical_json())
        return 0

    dist = _load_dist(args.dist) if args.dist else None
    if args.algorithm == "known-d":
        if dist is None:
            raise InputError("known-d needs --dist")
        seq = sample_arrivals(dist, n, substream(args.seed, "arrivals"))
        _, rep = run_known_d(
            norm, dist, seq,
            alpha=_frac(args.alpha) if args.alpha else None,
            eta=_frac(args.eta) if args.eta else None,
            epsilon=_frac(args.epsilon))
        _emit(jsonio.report_to_obj(rep), args.out)
        return 0

    if dist is None:
        raise InputError("unknown-d needs --dist (the hidden arrival law)")
    seq = sample_arrivals(dist, n, substream(args.seed, "arrivals"))
    _, rep = run_unknown_d(
        norm, seq,
        alpha=_frac(args.alpha) if args.alpha else None,
        eta=_frac(args.eta) if args.eta else None,
        c=_frac(args.c), seed=args.seed)
    _emit(jsonio.report_to_obj(rep), args.out)
    return 0


def _cmd_mc(args) -> int:
    config = harness.McConfig(
        algorithm=args.algorithm,
        trials=args.trials,
        master_seed=args.seed,
        instance_obj=jsonio.load(args.instance) if args.instance else None,
        generator=args.generator,
        generator_params=json.loads(args.generator_params) if args.generator_params else None,
        fresh_instance_per_trial=not args.fixed_instance,
        dist=tuple(json.loads(args.dist)) if args.dist and args.dist.startswith("[")
        else tuple(jsonio.distribution_to_obj(_load_dist(args.dist))["probs"]) if args.dist else None,
        hidden_dist=tuple(json.loads(args.hidden_dist)) if args.hidden_dist and args.hidden_dist.startswith("[")
        else tuple(jsonio.distribution_to_obj(_load_dist(args.hidden_dist))["probs"]) if args.hidden_dist else None,
        alpha=args.alpha,
        eta=args.eta,
        epsilon=args.epsilon,
        c=args.c,
        arrivals=args.arrivals,
        parallelism=args.parallelism,
    )
    agg = harness.monte_carlo(config)
    if args.out:
        harness.emit_report(agg, args.format, args.out)
    else:
        print(agg.canonical_json())
    return 0


def _cmd_perturb(args) -> int:
    inst = jsonio.instance_from_obj(jsonio.load(args.instance))
    out = harness.perturb(inst, _frac(args.beta), args.seed)
    _emit(jsonio.instance_to_obj(out), args.out)
    return 0


def _cmd_report(args) -> int:
    obj = jsonio.load(args.aggregate)
    agg = harness.AggregateReport(
        config=obj["config"], rows=obj["rows"], success_rate=obj["successRate"],
        failure_histogram=obj["failureHistogram"],
        invariant_violations=obj["invariantViolations"],
        min_ratio_overall=obj["minRatioOverall"], mean_min_ratio=obj["meanMinRatio"],
        quantiles=obj["quantiles"])
    if args.format == "csv":
        text = harness.render_csv(agg)
    else:
        text = agg.canonical_json() + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmsonline",
                                description="Online maximin-share allocation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="emit a generated instance as JSON")
    g.add_argument("kind", choices=sorted(generators.GENERATORS))
    g.add_argument("--n", type=int, default=4)
    g.add_argument("--m", type=int, default=12)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--eps", default="1/10")
    g.add_argument("--model", default="uniform", choices=("uniform", "binary", "clustered"))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.add_argument("--dist-out")
    g.set_defaults(fn=_cmd_gen)

    s = sub.add_parser("mms", help="solve for a type's maximin share")
    s.add_argument("action", choices=("solve",))
    s.add_argument("--instance", required=True)
    s.add_argument("--type", type=int, required=True)
    s.add_argument("--bundles", type=int, required=True)
    s.add_argument("--brute-force", action="store_true")
    s.add_argument("--out")
    s.set_defaults(fn=_cmd_mms)

    r = sub.add_parser("run", help="run one online allocation")
    r.add_argument("algorithm", choices=harness.ALGORITHMS)
    r.add_argument("--instance", required=True)
    r.add_argument("--arrivals")
    r.add_argument("--enumerate", action="store_true")
    r.add_argument("--trace", action="store_true")
    r.add_argument("--dist", help="distribution JSON (known-d parameter / unknown-d hidden law)")
    r.add_argument("--alpha")
    r.add_argument("--eta")
    r.add_argument("--epsilon", default="1/10")
    r.add_argument("--c", default="1/20")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--trials", type=int, default=1,
                   help="repeat with per-trial arrival substreams and aggregate")
    r.add_argument("--out")
    r.set_defaults(fn=_cmd_run)

    mc = sub.add_parser("mc", help="seeded Monte-Carlo experiment")
    mc.add_argument("--algorithm", required=True, choices=harness.ALGORITHMS)
    mc.add_argument("--trials", type=int, required=True)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--instance")
    mc.add_argument("--generator", choices=sorted(generators.GENERATORS))
    mc.add_argument("--generator-params", help='JSON object, e.g. \'{"n":200,"m":1000,"k":3}\'')
    mc.add_argument("--fixed-instance", action="store_true",
                    help="one generated instance reused across trials")
    mc.add_argument("--dist", help="JSON list of probs or a distribution file")
    mc.add_argument("--hidden-dist", help="JSON list of probs or a distribution file")
    mc.add_argument("--alpha")
    mc.add_argument("--eta")
    mc.add_argument("--epsilon")
    mc.add_argument("--c")
    mc.add_argument("--arrivals", default="iid", choices=("iid", "exhaustive"))
    mc.add_argument("--parallelism", type=int, default=1)
    mc.add_argument("--format", default="json", choices=("json", "csv"))
    mc.add_argument("--out")
    mc.set_defaults(fn=_cmd_mc)

    pe = sub.add_parser("perturb", help="multiplicative prediction-error noise")
    pe.add_argument("--instance", required=True)
    pe.add_argument("--beta", required=True)
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--out")
    pe.set_defaults(fn=_cmd_perturb)

    rp = sub.add_parser("report", help="re-render an aggregate report")
    rp.add_argument("--aggregate", required=True)
    rp.add_argument("--format", default="json", choices=("json", "csv"))
    rp.add_argument("--out")
    rp.set_defaults(fn=_cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except (InputError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
