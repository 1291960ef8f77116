import csv
import json
import math
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from phenoess.cli import main
from phenoess.disturbance import uniform

REPRO = Path(__file__).resolve().parents[1] / "repro"


def run(*argv):
    return main([str(a) for a in argv])


def read_json(path):
    return json.loads(Path(path).read_text())


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_ess_supercritical(tmp_path):
    assert run("ess", "--a", 5, "--p", 0.2, "--disturbance", "uniform:0.5,0.9", "--grid", 2001,
               "--out-dir", tmp_path) == 0
    s = read_json(tmp_path / "summary.json")
    assert s["gamma"] == pytest.approx(0.10142, rel=0.005)
    assert s["lambda"] == pytest.approx(0.120448, rel=0.005)
    assert s["regime"] == "supercritical"
    assert max(s["residuals"].values()) <= 1e-8
    rows = read_csv(tmp_path / "ess.csv")
    assert rows[0] == ["x", "F_nu", "F_mu", "g"]
    assert rows[1][0] == "0" and float(rows[1][2]) == pytest.approx(s["gamma"], rel=1e-10)
    assert float(rows[-1][1]) == 1.0


def test_ess_subcritical_and_p_zero(tmp_path, capsys):
    assert run("ess", "--a", 0.2, "--p", 0.2, "--disturbance", "uniform:0.3,1", "--out-dir", tmp_path) == 0
    assert read_json(tmp_path / "summary.json")["lambda"] == pytest.approx(0.833158, rel=0.005)
    assert run("ess", "--a", 1, "--p", 0, "--out-dir", tmp_path) == 0
    s = read_json(tmp_path / "summary.json")
    assert s["a_M"] == "inf"
    assert uniform(0, 1).tail(s["x_c"]) == pytest.approx(0.5, abs=1e-12)
    assert '"lambda"' in capsys.readouterr().out


def test_ess_threshold_syntax(tmp_path):
    assert run("ess", "--a", "aM:0.3", "--p", 0.3, "--out-dir", tmp_path) == 0
    s = read_json(tmp_path / "summary.json")
    assert s["regime"] == "critical" and s["lambda"] == pytest.approx(0.3, abs=1e-8)


def test_config_and_override(tmp_path):
    cfg = tmp_path / "scenario.json"
    cfg.write_text(json.dumps({"a": 5, "p": 0.2, "disturbance": {"kind": "uniform", "t_low": 0, "t_high": 1},
                               "grid": 501, "tolerances": {"abs": 1e-10, "rel": 1e-10}}))
    assert run("ess", "--config", cfg, "--out-dir", tmp_path / "a") == 0
    assert read_json(tmp_path / "a" / "summary.json")["p"] == 0.2
    assert run("ess", "--config", cfg, "--p", 0.5, "--out-dir", tmp_path / "b") == 0
    assert read_json(tmp_path / "b" / "summary.json")["gamma"] == pytest.approx(0.456433, rel=0.005)


def test_piecewise_file(tmp_path):
    f = tmp_path / "tri.json"
    f.write_text(json.dumps({"kind": "piecewise", "knots": [[0, 0], [0.5, 2], [1, 0]]}))
    assert run("ess", "--a", 1, "--p", 0.3, "--disturbance", f"piecewise:@{f}", "--out-dir", tmp_path) == 0


def test_usage_errors(tmp_path, capsys):
    assert run("ess", "--a", -1, "--p", 0.2, "--out-dir", tmp_path) == 2
    assert run("ess", "--a", 1, "--p", 1.5, "--out-dir", tmp_path) == 2
    assert run("ess", "--a", 1, "--p", 0.2, "--disturbance", "gauss:0,1", "--out-dir", tmp_path) == 2
    assert run("ess", "--a", 1, "--p", 0.2, "--config", tmp_path / "missing.json") == 2
    assert run("simulate", "--a", 1, "--p", 0.2, "--out-dir", tmp_path) == 2
    assert run("climate", "--a", 1, "--p", 0.2, "--out-dir", tmp_path) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        run("nonsense")
    assert exc.value.code == 2


def test_numeric_failure_exit_code(tmp_path):
    assert run("ess", "--a", 1, "--p", 0.2, "--abs-tol", 1e-10, "--rel-tol", 1e-10, "--grid", 3,
               "--out-dir", tmp_path) == 0
    # an absurdly loose tolerance is accepted; a zero one is a usage error
    assert run("ess", "--a", 1, "--p", 0.2, "--abs-tol", 0, "--out-dir", tmp_path) == 2


def test_sweep(tmp_path):
    assert run("sweep", "--a", "0.1:5:25", "--p", "0,0.1,0.3,0.5", "--disturbance", "uniform:0,1",
               "--check-monotonicity", "--out-dir", tmp_path) == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert rows[0] == ["a", "p", "a_M", "gamma", "x_c", "lambda", "regime"]
    body = rows[1:]
    assert len(body) == 100
    for p in ("0.1", "0.3", "0.5"):
        regs = [r[6] for r in body if r[1] == p]
        flips = sum(1 for u, v in zip(regs, regs[1:]) if u != v)
        # a_M(0.1) = 6.87 lies beyond the a range
        assert flips == (0 if p == "0.1" else 1)
    for r in body:
        a, lam = float(r[0]), float(r[5])
        # csv values carry 12 significant digits
        assert math.exp(-a) * (1 - 1e-11) <= lam <= (1 + 1e-11) / (1 + a)
        if r[1] == "0":
            assert float(r[3]) == 0.0 and r[2] == "inf"


def test_sweep_parallel_matches_serial(tmp_path):
    args = ["sweep", "--a", "0.5:4:6", "--p", "0.2,0.4"]
    assert run(*args, "--out-dir", tmp_path / "s") == 0
    assert run(*args, "--jobs", 2, "--out-dir", tmp_path / "j") == 0
    assert (tmp_path / "s" / "sweep.csv").read_bytes() == (tmp_path / "j" / "sweep.csv").read_bytes()


def test_fitness_commands(tmp_path, capsys):
    assert run("fitness", "--from-ess", "--a", 0.2, "--p", 0.2, "--disturbance", "uniform:0,1",
               "--out-dir", tmp_path, "--strict") == 0
    assert read_json(tmp_path / "certificate.json")["certified"] is True
    assert read_csv(tmp_path / "profile.csv")[0] == ["y", "phi", "on_support"]
    strat = tmp_path / "strat.json"
    strat.write_text(json.dumps({"atom_at_zero": 0.0, "ac_knots": [[0, 0], [1, 1]]}))
    args = ["fitness", "--strategy", strat, "--a", 5, "--p", 0.2, "--disturbance", "uniform:0.5,0.9",
            "--out-dir", tmp_path]
    assert run(*args) == 0
    assert read_json(tmp_path / "certificate.json")["certified"] is False
    assert run(*args, "--strict") == 4
    capsys.readouterr()
    assert run("fitness", "--max-average", "--a", 5) == 0
    assert float(capsys.readouterr().out) == pytest.approx((1 - math.exp(-5)) / 5, rel=1e-11)


def test_climate_commands(tmp_path, capsys):
    base = ["climate", "--a", 1.0, "--p", 0.3, "--disturbance", "uniform:0.3,1"]
    assert run(*base, "--disturbance2", "uniform:1.1,1.6", "--out-dir", tmp_path / "late") == 0
    assert read_json(tmp_path / "late" / "delta.json")["delta"] < 0
    assert read_csv(tmp_path / "late" / "compare.csv")[0] == ["y", "phi_1", "phi_2", "diff"]
    assert run(*base, "--disturbance2", "uniform:0,0.35", "--dp", "--out-dir", tmp_path / "early") == 0
    assert read_json(tmp_path / "early" / "delta.json")["delta"] > 0
    assert read_json(tmp_path / "early" / "dp.json")["dp_lambda_bar"] >= 0
    assert "dp_lambda_bar" in capsys.readouterr().out


def test_simulate_deterministic(tmp_path):
    args = ["simulate", "--a", 0.2, "--p", 0.2, "--seed", 4, "--population", 2000, "--replications", 40,
            "--best-response", "--iterations", 400, "--br-grid", 100]
    assert run(*args, "--out-dir", tmp_path / "x") == 0
    assert run(*args, "--out-dir", tmp_path / "y") == 0
    for name in ("mc.csv", "mc_summary.json", "br.csv", "br_history.csv"):
        assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()
    s = read_json(tmp_path / "x" / "mc_summary.json")
    assert s["within_3ci"] is True
    assert read_csv(tmp_path / "x" / "mc.csv")[0] == ["y", "mean", "ci"]


def test_best_response_cli(tmp_path):
    assert run("simulate", "--a", 0.2, "--p", 0.2, "--seed", 1, "--population", 1000, "--replications", 10,
               "--best-response", "--out-dir", tmp_path) == 0
    assert read_json(tmp_path / "mc_summary.json")["br_ks_to_ess"] <= 0.02


def test_ess_byte_stable(tmp_path):
    for name in ("one", "two"):
        assert run("ess", "--a", 3, "--p", 0.4, "--disturbance", "uniform:0.2,0.8", "--out-dir",
                   tmp_path / name) == 0
    for f in ("ess.csv", "summary.json"):
        assert (tmp_path / "one" / f).read_bytes() == (tmp_path / "two" / f).read_bytes()


@pytest.mark.parametrize("cfg", sorted(REPRO.glob("*.json")), ids=lambda p: p.stem)
def test_repro_configs(cfg, tmp_path):
    assert run("ess", "--config", cfg, "--out-dir", tmp_path) == 0
    rows = read_csv(tmp_path / "ess.csv")
    assert float(rows[-1][1]) == 1.0


@pytest.mark.skipif(shutil.which("phenoess") is None, reason="console script not installed")
def test_console_script(tmp_path):
    out = subprocess.run(["phenoess", "fitness", "--max-average", "--a", "1"], capture_output=True, text=True)
    assert out.returncode == 0 and float(out.stdout) == pytest.approx(1 - math.exp(-1))


def test_module_entry(tmp_path):
    out = subprocess.run([sys.executable, "-m", "phenoess.cli", "ess", "--a", "1", "--p", "0.2",
                          "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
