import json
from fractions import Fraction as F

import pytest

from mmsonline import (
    TypeDistribution,
    gen_random,
    normalize,
    perturb,
)
from mmsonline.harness import (
    AggregateReport,
    CSV_COLUMNS,
    McConfig,
    degradation_trial,
    emit_report,
    monte_carlo,
    render_csv,
    run_trial,
)
from mmsonline.jsonio import canonical_json, instance_to_obj
from mmsonline.solver import mms_exact

UNIFORM2 = ("1/2", "1/2")
UNIFORM3 = ("1/3", "1/3", "1/3")


def _fixed_instance_obj(seed=0, n=3, m=8, k=2):
    from mmsonline import gen_normalized_random
    from mmsonline.jsonio import instance_to_obj
    norm = gen_normalized_random(n, m, k, seed=seed)
    return instance_to_obj(norm.base, norm)


def test_single_trial_matches_direct_run():
    cfg = McConfig(algorithm="adversarial", trials=1, master_seed=5,
                   instance_obj=_fixed_instance_obj(), dist=UNIFORM2)
    agg = monte_carlo(cfg)
    row = agg.rows[0]
    again = run_trial(cfg, 0)
    assert row == again
    assert agg.success_rate == 1.0


def test_exhaustive_enumeration_success_rate_exactly_one():
    cfg = McConfig(algorithm="adversarial", trials=16, master_seed=1,
                   instance_obj=_fixed_instance_obj(n=4, m=10),
                   arrivals="exhaustive")
    agg = monte_carlo(cfg)
    assert len(agg.rows) == 16
    assert agg.success_rate == 1.0
    assert agg.invariant_violations == 0
    # wrong trial count is rejected
    with pytest.raises(Exception):
        monte_carlo(McConfig(algorithm="adversarial", trials=5, master_seed=1,
                             instance_obj=_fixed_instance_obj(n=4, m=10),
                             arrivals="exhaustive"))


def test_tightness_half_mc_all_fail_with_empty_reserve():
    from mmsonline import gen_tightness_half
    from mmsonline.jsonio import instance_to_obj as i2o
    norm = gen_tightness_half(3, 30, F(1, 10))
    cfg = McConfig(algorithm="known-d", trials=6, master_seed=3,
                   instance_obj=i2o(norm.base, norm), dist=UNIFORM3,
                   alpha="3/5", epsilon="1/10")
    agg = monte_carlo(cfg)
    assert agg.success_rate == 0.0
    assert set(agg.failure_histogram) == {"emptyReserve"}


def test_determinism_across_parallelism():
    base = dict(algorithm="known-d", trials=12, master_seed=11,
                generator="normalized-random",
                generator_params={"n": 12, "m": 40, "k": 3},
                dist=UNIFORM3, eta="1/2", epsilon="1/10")
    serial = monte_carlo(McConfig(**base, parallelism=1))
    parallel = monte_carlo(McConfig(**base, parallelism=3))
    assert serial.canonical_json() == parallel.canonical_json()


def test_repeat_same_seed_byte_identical():
    cfg = McConfig(algorithm="unknown-d", trials=4, master_seed=9,
                   generator="normalized-random",
                   generator_params={"n": 40, "m": 160, "k": 2, "weight_lo": 2, "weight_hi": 4},
                   hidden_dist=UNIFORM2, eta="1/2", c="1/20")
    a = monte_carlo(cfg).canonical_json()
    b = monte_carlo(cfg).canonical_json()
    assert a == b
    assert monte_carlo(McConfig(**{**cfg.__dict__, "master_seed": 10})).canonical_json() != a


def test_perturb_identity_and_bounds():
    inst = gen_random(3, 8, 2, "uniform", seed=4)
    assert perturb(inst, F(1), seed=7) == inst
    beta = F(6, 5)
    pert = perturb(inst, beta, seed=7)
    for row, prow in zip(inst.type_values, pert.type_values):
        for v, pv in zip(row, prow):
            assert v / beta <= pv <= v * beta


def test_perturb_share_bracketing():
    beta = F(6, 5)
    for seed in range(10):
        inst = gen_random(3, 8, 2, "uniform", seed=seed)
        pert = perturb(inst, beta, seed=seed)
        for i in range(2):
            true_mms = mms_exact(inst.type_values[i], 3).value
            pert_mms = mms_exact(pert.type_values[i], 3).value
            assert true_mms / beta <= pert_mms <= true_mms * beta


def test_degradation_trial_adversarial():
    dist = TypeDistribution.from_probs([F(1, 2), F(1, 2)])
    out = degradation_trial("adversarial", gen_random(3, 8, 2, "uniform", seed=2),
                            F(6, 5), seed=3, dist=dist)
    assert out["bracketOk"]
    assert out["degradationOk"]
    if out["perturbedSuccess"]:
        assert out["trueMinRatio"] >= out["degradedAlpha"]


def test_emit_report_roundtrip_and_csv(tmp_path):
    cfg = McConfig(algorithm="adversarial", trials=3, master_seed=2,
                   instance_obj=_fixed_instance_obj(), dist=UNIFORM2)
    agg = monte_carlo(cfg)
    jpath = tmp_path / "agg.json"
    emit_report(agg, "json", jpath)
    parsed = json.loads(jpath.read_text())
    assert canonical_json(parsed) == agg.canonical_json()
    cpath = tmp_path / "agg.csv"
    emit_report(agg, "csv", cpath)
    lines = cpath.read_text().strip().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 4  # header + 3 rows


def test_empty_aggregate_header_only():
    agg = AggregateReport(config={}, rows=[], success_rate=0.0, failure_histogram={},
                          invariant_violations=0, min_ratio_overall="1/1",
                          mean_min_ratio=0.0, quantiles={})
    assert render_csv(agg).strip() == ",".join(CSV_COLUMNS)


def test_mcconfig_validation():
    with pytest.raises(Exception):
        McConfig(algorithm="nope", trials=1, master_seed=0, generator="random")
    with pytest.raises(Exception):
        McConfig(algorithm="adversarial", trials=1, master_seed=0)  # no instance source
