import json
import subprocess
import sys

import pytest

from blockdemix.cli import main

SMALL = ["--n", "64", "--s", "8", "--b", "4"]


def _generate(tmp_path, *extra):
    path = tmp_path / "inst.json"
    assert main(["generate", *SMALL, "--out", str(path), *extra]) == 0
    return path


def test_generate_solve_round_trip(tmp_path, capsys):
    inst = _generate(tmp_path, "--m", "200", "--link", "identity", "--seed", "3")
    out = tmp_path / "res.json"
    trace = tmp_path / "trace.csv"
    assert main(["solve", str(inst), "--out", str(out), "--trace-csv", str(trace)]) == 0
    doc = json.loads(out.read_text())
    assert doc["algorithm"] == "struct-dht" and doc["normalized_error"] < 1e-5
    assert trace.read_text().startswith("iter,error\n")


@pytest.mark.parametrize("alg", ["dht", "dst"])
def test_solve_baselines(tmp_path, capsys, alg):
    inst = _generate(tmp_path, "--m", "100")
    assert main(["solve", str(inst), "--algorithm", alg, "--lam", "0.001"]) == 0
    assert json.loads(capsys.readouterr().out)["algorithm"] == alg


def test_mf_solve(tmp_path, capsys):
    inst = _generate(tmp_path, "--m", "192", "--k", "6", "--design", "factored",
                     "--link", "sawtooth")
    assert main(["solve", str(inst), "--refine"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["algorithm"] == "mf-struct-dht" and "z_hat" in doc and "range_violations" in doc


def test_analyze(tmp_path, capsys):
    inst = _generate(tmp_path, "--m", "100")
    assert main(["analyze", str(inst), "--trials", "3"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert {"level", "m_hat", "M_hat", "window", "condition_ok", "rho_at_default_step"} <= set(rep)


def test_experiment_and_plot(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\nalgorithms = struct-dht\nm_grid = 20, 60\ntrials = 2\n"
                   "[signal]\nn = 64\ns = 8\nb = 4\n")
    out = tmp_path / "run"
    assert main(["experiment", "--config", str(cfg), "--out", str(out)]) == 0
    for name in ("sweep.csv", "sweep.json", "success.svg", "error.svg"):
        assert (out / name).exists()
    plots = tmp_path / "plots"
    assert main(["plot", str(out / "sweep.csv"), "--out", str(plots)]) == 0
    assert (plots / "success.svg").read_bytes() == (out / "success.svg").read_bytes()


def test_exit_codes(tmp_path, capsys):
    inst = _generate(tmp_path, "--m", "100")
    # periodic link on an aperiodic solver
    assert main(["solve", str(inst), "--link", "sin", "--algorithm", "dht"]) == 2
    assert main(["generate", "--n", "10", "--s", "3", "--b", "2"]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nwhat = 1\n")
    assert main(["experiment", "--config", str(bad)]) == 2
    assert main(["solve", str(tmp_path / "missing.json")]) == 3
    lin = tmp_path / "lin.json"
    assert main(["generate", *SMALL, "--m", "100", "--link", "identity", "--out", str(lin)]) == 0
    assert main(["solve", str(lin), "--eta", "1000"]) == 4


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "blockdemix", "generate", "--n", "10",
                          "--s", "3", "--b", "2"], capture_output=True, text=True)
    assert res.returncode == 2 and "configuration error" in res.stderr
