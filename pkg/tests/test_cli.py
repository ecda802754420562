import json
import subprocess
import sys


from mmsonline.cli import main


def run_cli(args):
    return main(list(args))


def test_gen_and_solve_roundtrip(tmp_path):
    inst = tmp_path / "inst.json"
    assert run_cli(["gen", "random", "--n", "3", "--m", "8", "--k", "2",
                    "--seed", "5", "--out", str(inst)]) == 0
    out = tmp_path / "mms.json"
    assert run_cli(["mms", "solve", "--instance", str(inst), "--type", "0",
                    "--bundles", "3", "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    assert obj["exact"] is True
    assert len(obj["witness"]) == 3
    # brute force agrees
    out2 = tmp_path / "mms2.json"
    assert run_cli(["mms", "solve", "--instance", str(inst), "--type", "0",
                    "--bundles", "3", "--brute-force", "--out", str(out2)]) == 0
    assert json.loads(out2.read_text())["value"] == obj["value"]


def test_run_adversarial_with_sequence_and_enumerate(tmp_path):
    inst = tmp_path / "inst.json"
    run_cli(["gen", "normalized-random", "--n", "3", "--m", "8", "--k", "2",
             "--seed", "1", "--out", str(inst)])
    seq = tmp_path / "seq.json"
    seq.write_text(json.dumps({"sequence": [0, 1, 0]}))
    rep = tmp_path / "rep.json"
    assert run_cli(["run", "adversarial", "--instance", str(inst),
                    "--arrivals", str(seq), "--trace", "--out", str(rep)]) == 0
    obj = json.loads(rep.read_text())
    assert obj["succeededAtAlpha"] is True
    assert "trace" in obj
    rep2 = tmp_path / "worst.json"
    assert run_cli(["run", "adversarial", "--instance", str(inst),
                    "--enumerate", "--out", str(rep2)]) == 0
    worst = json.loads(rep2.read_text())
    num, den = worst["minRatio"].split("/")
    assert int(num) * 2 >= int(den)  # worst case still >= 1/2


def test_run_known_and_unknown(tmp_path):
    inst = tmp_path / "inst.json"
    run_cli(["gen", "normalized-random", "--n", "12", "--m", "40", "--k", "3",
             "--seed", "2", "--out", str(inst)])
    dist = tmp_path / "dist.json"
    dist.write_text(json.dumps({"probs": ["1/3", "1/3", "1/3"]}))
    rep = tmp_path / "rep.json"
    assert run_cli(["run", "known-d", "--instance", str(inst), "--dist", str(dist),
                    "--eta", "1/2", "--epsilon", "1/10", "--seed", "4",
                    "--out", str(rep)]) == 0
    assert "minRatio" in json.loads(rep.read_text())
    rep2 = tmp_path / "rep2.json"
    assert run_cli(["run", "unknown-d", "--instance", str(inst), "--dist", str(dist),
                    "--eta", "1/2", "--c", "1/20", "--seed", "4",
                    "--out", str(rep2)]) == 0
    assert "details" in json.loads(rep2.read_text())


def test_mc_and_report_roundtrip(tmp_path):
    agg = tmp_path / "agg.json"
    assert run_cli(["mc", "--algorithm", "adversarial", "--trials", "8",
                    "--seed", "3", "--generator", "normalized-random",
                    "--generator-params", '{"n": 3, "m": 8, "k": 2}',
                    "--dist", '["1/2", "1/2"]', "--out", str(agg)]) == 0
    obj = json.loads(agg.read_text())
    assert obj["successRate"] == 1.0
    csv_out = tmp_path / "rows.csv"
    assert run_cli(["report", "--aggregate", str(agg), "--format", "csv",
                    "--out", str(csv_out)]) == 0
    lines = csv_out.read_text().strip().splitlines()
    assert len(lines) == 9


def test_perturb_cli(tmp_path):
    inst = tmp_path / "inst.json"
    run_cli(["gen", "random", "--n", "3", "--m", "6", "--k", "2", "--seed", "8",
             "--out", str(inst)])
    out = tmp_path / "pert.json"
    assert run_cli(["perturb", "--instance", str(inst), "--beta", "6/5",
                    "--seed", "1", "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    assert obj["n"] == 3 and obj["m"] == 6


def test_exit_code_input_error(tmp_path):
    missing = tmp_path / "nope.json"
    assert run_cli(["mms", "solve", "--instance", str(missing),
                    "--type", "0", "--bundles", "2"]) == 1


def test_gen_lower_bound_and_tight_instances(tmp_path):
    for args in (["gen", "lower-bound", "--k", "16", "--n", "4"],
                 ["gen", "tight-half", "--k", "3", "--n", "5"],
                 ["gen", "tight-pk", "--k", "4", "--n", "20"],
                 ["gen", "adv-counter", "--n", "4", "--eps", "1/32"],
                 ["gen", "example1", "--m", "6"]):
        out = tmp_path / "g.json"
        assert run_cli(args + ["--out", str(out)]) == 0
        assert json.loads(out.read_text())["n"] >= 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mmsonline.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "mmsonline" in proc.stdout
