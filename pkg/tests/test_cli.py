import numpy as np
import pytest

from sysid.cli import main

CFG = """
[system]
source = random-ensemble
d = 2
m = 2
sigma = 0.05
gamma = 1.0

[run]
mode = full
policy = greedy
horizon = 15
seeds = 2
"""


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(CFG, encoding="utf-8")
    return str(path)


def test_ensemble_writes_csv(cfg_path, tmp_path):
    out = tmp_path / "runs.csv"
    code = main(["ensemble", "--config", cfg_path, "--out", str(out), "--no-timestamp"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# config:")
    assert lines[1] == "seed,policy,t,sq_error,plan_seconds,energy"
    assert len(lines) == 2 + 2 * 15


def test_identify_single_trial(cfg_path, tmp_path):
    out = tmp_path / "one.csv"
    code = main(["identify", "--config", cfg_path, "--out", str(out), "--no-timestamp"])
    assert code == 0
    data = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert len(data) == 1 + 15  # header plus one trial


def test_simulate_trajectory_schema(cfg_path, tmp_path):
    out = tmp_path / "traj.csv"
    assert main(["simulate", "--config", cfg_path, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,x0,x1,u0,u1,w0,w1"
    assert len(lines) == 1 + 16  # T+1 state rows
    first = lines[1].split(",")
    assert float(first[1]) == 0.0 and float(first[2]) == 0.0


def test_fit_perf_pipeline(cfg_path, tmp_path):
    cfg_sweep = tmp_path / "sweep.cfg"
    cfg_sweep.write_text(CFG.replace("horizon = 15", "horizon = 10,20,40"), encoding="utf-8")
    runs = tmp_path / "runs.csv"
    assert main(["ensemble", "--config", str(cfg_sweep), "--out", str(runs)]) == 0
    grid = tmp_path / "grid.csv"
    assert main(["fit-perf", str(runs), "--out", str(grid)]) == 0
    lines = grid.read_text().splitlines()
    assert lines[0] == "policy,n_grad,T,c,eps_median,eps_mean,n_trials"
    assert len(lines) == 1 + 3  # one cell per horizon


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[system]\nsigma = 0.1\n", encoding="utf-8")
    assert main(["ensemble", "--config", str(bad)]) == 2


def test_flag_overrides_apply(cfg_path, tmp_path):
    out = tmp_path / "o.csv"
    code = main(
        ["ensemble", "--config", cfg_path, "--out", str(out), "--no-timestamp",
         "--qp-tol", "1e-8"]
    )
    assert code == 0


def test_schedule_flag_round_trip(tmp_path):
    cfg = tmp_path / "grad.cfg"
    cfg.write_text(
        CFG.replace("policy = greedy", "policy = gradient\n")
        + "[gradient]\nn_grad = 3\nschedule = 0,5,T\n",
        encoding="utf-8",
    )
    out = tmp_path / "g.csv"
    assert main(["ensemble", "--config", str(cfg), "--out", str(out),
                 "--schedule", "0,7,T", "--no-timestamp"]) == 0
    assert "schedule=0,7,T" in out.read_text().splitlines()[0]
