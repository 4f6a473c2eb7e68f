"""Command line: schemas, exit codes, outputs, manifest reproducibility."""

import json
import math
import os

import numpy as np
import pytest

from tvarkern.cli import (
    CLT_HEADER,
    EFFICIENCY_HEADER,
    ESTIMATE_HEADER,
    LAN_HEADER,
    RATE_HEADER,
    RISK_HEADER,
    run,
)
from tvarkern.estimator import estimate, get_kernel, make_schedule
from tvarkern.model import load_trajectory, make_coef, noise_by_id, simulate


RISK_ARGS = ["--set", 'coef_ids=["const_half"]', "--set", 'noise_ids=["gaussian"]',
             "--set", "n_grid=[256]", "--set", "replications=25"]


def run_ok(argv, capsys):
    code = run(argv)
    err = capsys.readouterr().err
    assert code == 0, err
    return err


def run_fail(argv, capsys, expect_code=2):
    code = run(argv)
    err = capsys.readouterr().err
    assert code == expect_code, err
    assert err.startswith("error: ")
    assert err.strip().count("\n") == 0  # single-line diagnostics
    return err


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_simulate_then_estimate_roundtrip(tmp_path, capsys):
    sim_dir = tmp_path / "sim"
    run_ok(["simulate", "--out-dir", str(sim_dir), "--set", "coef_id=sine",
            "--set", "noise_id=gaussian", "--set", "n=512", "--set", "seed=13"],
           capsys)
    traj_path = sim_dir / "trajectory.csv"
    traj = load_trajectory(traj_path)
    direct = simulate(make_coef("sine", 0.5), noise_by_id("gaussian"), 512, 0.0, 13)
    assert np.array_equal(traj.y, direct.y)
    assert np.array_equal(traj.residuals, direct.residuals)

    est_dir = tmp_path / "est"
    run_ok(["estimate", "--out-dir", str(est_dir),
            "--set", f"trajectory={traj_path}"], capsys)
    lines = (est_dir / "estimate.csv").read_text().splitlines()
    assert lines[0] == ESTIMATE_HEADER
    cells = lines[1].split(",")
    sched = make_schedule(512, 1.0, 0.5)
    res = estimate(direct, 0.5, get_kernel("indicator"), sched)
    assert float(cells[0]) == res.value
    assert float(cells[1]) == res.denom
    assert cells[2] == ("1" if res.kept else "0")
    assert float(cells[3]) == sched.h
    assert float(cells[4]) == sched.rate
    assert float(cells[5]) == sched.trunc
    assert float(cells[6]) == sched.denom_floor

    manifest = json.loads((est_dir / "manifest.json").read_text())
    assert manifest["subcommand"] == "estimate"
    assert manifest["outputs"] == ["estimate.csv"]
    assert manifest["config"]["beta"] == 1.0  # defaults are echoed


def test_risk_outputs_and_rerun_bytes(tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    argv = ["risk"] + RISK_ARGS
    run_ok(argv + ["--out-dir", str(out1)], capsys)
    run_ok(argv + ["--out-dir", str(out2)], capsys)
    assert read(out1 / "risk.csv") == read(out2 / "risk.csv")
    assert read(out1 / "manifest.json") == read(out2 / "manifest.json")
    lines = (out1 / "risk.csv").read_text().splitlines()
    assert lines[0] == RISK_HEADER
    assert len(lines) == 2
    cells = lines[1].split(",")
    assert cells[0] == "const_half" and cells[1] == "gaussian" and cells[2] == "256"
    # floats are written with 17 significant digits and parse back exactly
    for cell in cells[3:]:
        assert cell == format(float(cell), ".17g")


def test_thread_count_never_changes_bytes(tmp_path, capsys, monkeypatch):
    outputs = []
    for threads, sub in (("1", "t1"), ("3", "t3")):
        monkeypatch.setenv("TVARKERN_THREADS", threads)
        out = tmp_path / sub
        run_ok(["risk"] + RISK_ARGS + ["--out-dir", str(out)], capsys)
        outputs.append(read(out / "risk.csv") + read(out / "manifest.json"))
    assert outputs[0] == outputs[1]


def test_manifest_alone_reproduces_outputs(tmp_path, capsys):
    first = tmp_path / "first"
    run_ok(["rate", "--out-dir", str(first),
            "--set", 'coef_ids=["sine"]', "--set", 'noise_ids=["gaussian"]',
            "--set", "n_grid=[256,512,1024,2048]", "--set", "replications=30"],
           capsys)
    manifest = json.loads((first / "manifest.json").read_text())
    assert manifest["outputs"] == ["risk.csv", "rate.csv"]
    config_path = tmp_path / "replay.json"
    config_path.write_text(json.dumps(manifest["config"]))
    second = tmp_path / "second"
    run_ok([manifest["subcommand"], "--config", str(config_path),
            "--out-dir", str(second)], capsys)
    for name in manifest["outputs"] + ["manifest.json"]:
        assert read(first / name) == read(second / name), name
    canonical = json.dumps(manifest["config"], sort_keys=True, separators=(",", ":"))
    import hashlib
    assert manifest["config_sha256"] == hashlib.sha256(canonical.encode()).hexdigest()
    lines = (first / "rate.csv").read_text().splitlines()
    assert lines[0] == RATE_HEADER
    assert lines[1].split(",")[0] == "sine"


def test_config_file_and_override_precedence(tmp_path, capsys):
    config_path = tmp_path / "cfg.json"
    config_path.write_text(json.dumps({
        "coef_ids": ["const_half"], "noise_ids": ["gaussian"],
        "n_grid": [256], "replications": 10, "root_seed": 4}))
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_ok(["risk", "--config", str(config_path), "--out-dir", str(out1)], capsys)
    run_ok(["risk", "--config", str(config_path), "--out-dir", str(out2),
            "--set", "root_seed=5"], capsys)
    m1 = json.loads((out1 / "manifest.json").read_text())
    m2 = json.loads((out2 / "manifest.json").read_text())
    assert m1["config"]["root_seed"] == 4
    assert m2["config"]["root_seed"] == 5
    assert read(out1 / "risk.csv") != read(out2 / "risk.csv")


def test_schema_rejections(tmp_path, capsys):
    err = run_fail(["risk"] + RISK_ARGS + ["--set", "bogus=1",
                    "--out-dir", str(tmp_path)], capsys)
    assert "unknown config key 'bogus' for subcommand 'risk'" in err
    err = run_fail(["risk", "--set", 'coef_ids=["sine"]',
                    "--out-dir", str(tmp_path)], capsys)
    assert "missing required config key" in err
    err = run_fail(["risk"] + RISK_ARGS + ["--set", "replications=true",
                    "--out-dir", str(tmp_path)], capsys)
    assert "must be an integer" in err
    err = run_fail(["risk"] + RISK_ARGS + ["--set", 'n_grid="many"',
                    "--out-dir", str(tmp_path)], capsys)
    assert "must be a list of integers" in err
    err = run_fail(["risk"] + RISK_ARGS + ["--set", "badform",
                    "--out-dir", str(tmp_path)], capsys)
    assert "--set expects KEY=VALUE" in err


def test_parameter_rejections(tmp_path, capsys):
    err = run_fail(["risk"] + RISK_ARGS + ["--set", "beta=2.5",
                    "--out-dir", str(tmp_path)], capsys)
    assert "beta must lie in [1, 2)" in err
    err = run_fail(["risk"] + RISK_ARGS + ["--set", "gamma=0.5",
                    "--out-dir", str(tmp_path)], capsys)
    assert "gamma must lie in (0, 0.5)" in err
    err = run_fail(["risk"] + RISK_ARGS + ["--set", 'kernel_id="triangle"',
                    "--out-dir", str(tmp_path)], capsys)
    assert "unknown kernel_id" in err
    err = run_fail(["risk"] + RISK_ARGS + ["--set", 'noise_ids=["cauchy"]',
                    "--out-dir", str(tmp_path)], capsys)
    assert "unknown noise_id" in err
    err = run_fail(["rate"] + RISK_ARGS + ["--out-dir", str(tmp_path)], capsys)
    assert "at least 4 distinct n" in err
    err = run_fail(["efficiency"] + RISK_ARGS + ["--set", 'kernel_id="quartic"',
                    "--out-dir", str(tmp_path)], capsys)
    assert "requires the indicator kernel" in err
    err = run_fail(["efficiency"] + RISK_ARGS
                   + ["--set", 'coef_ids=["zero","const_half"]',
                      "--out-dir", str(tmp_path)], capsys)
    assert "exactly one coefficient" in err
    err = run_fail(["clt"] + RISK_ARGS
                   + ["--set", 'noise_ids=["gaussian","uniform"]',
                      "--out-dir", str(tmp_path)], capsys)
    assert "single" in err
    err = run_fail(["lemmas"] + RISK_ARGS + ["--set", 'coef_ids=["sine"]',
                    "--set", "eps=0.31", "--out-dir", str(tmp_path)], capsys)
    assert "stability" in err


def test_config_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    err = run_fail(["risk", "--config", str(bad), "--out-dir", str(tmp_path)], capsys)
    assert "error: " in err
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    err = run_fail(["risk", "--config", str(arr), "--out-dir", str(tmp_path)], capsys)
    assert "must be a JSON object" in err
    missing = tmp_path / "nope.json"
    run_fail(["risk", "--config", str(missing), "--out-dir", str(tmp_path)], capsys)
    err = run_fail(["estimate", "--set", "trajectory=/does/not/exist.csv",
                    "--out-dir", str(tmp_path)], capsys)
    assert "error: " in err


def test_estimate_window_too_wide_is_config_error(tmp_path, capsys):
    run_ok(["simulate", "--out-dir", str(tmp_path), "--set", "coef_id=zero",
            "--set", "noise_id=gaussian", "--set", "n=8", "--set", "seed=1"], capsys)
    err = run_fail(["estimate", "--out-dir", str(tmp_path),
                    "--set", f"trajectory={tmp_path / 'trajectory.csv'}"], capsys)
    assert "strictly inside" in err


def test_bad_thread_env_is_config_error(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("TVARKERN_THREADS", "abc")
    run_fail(["risk"] + RISK_ARGS + ["--out-dir", str(tmp_path)], capsys)


def test_unwritable_out_dir_is_runtime_error(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    run_fail(["risk"] + RISK_ARGS + ["--out-dir", str(blocker)], capsys,
             expect_code=1)


def test_unknown_subcommand_exits_2(capsys):
    assert run(["frobnicate"]) == 2
    capsys.readouterr()


def test_efficiency_and_clt_outputs(tmp_path, capsys):
    eff = tmp_path / "eff"
    run_ok(["efficiency", "--out-dir", str(eff), "--set", 'coef_ids=["const_half"]',
            "--set", 'noise_ids=["gaussian"]', "--set", "n_grid=[2048]",
            "--set", "replications=200"], capsys)
    lines = (eff / "efficiency.csv").read_text().splitlines()
    assert lines[0] == EFFICIENCY_HEADER
    n, ratio, target = lines[1].split(",")
    assert n == "2048"
    assert float(target) == math.sqrt(1.0 / math.pi)
    assert abs(float(ratio) - float(target)) < 0.2

    clt = tmp_path / "clt"
    run_ok(["clt", "--out-dir", str(clt), "--set", 'coef_ids=["const_half"]',
            "--set", 'noise_ids=["gaussian"]', "--set", "n_grid=[2048]",
            "--set", "replications=400"], capsys)
    lines = (clt / "clt.csv").read_text().splitlines()
    assert lines[0] == CLT_HEADER
    assert abs(float(lines[1].split(",")[2]) - 1.0) < 0.3


def test_lemmas_outputs(tmp_path, capsys):
    out = tmp_path / "lem"
    run_ok(["lemmas", "--out-dir", str(out), "--set", 'coef_ids=["const_half"]',
            "--set", 'noise_ids=["gaussian"]', "--set", "n_grid=[256]",
            "--set", "replications=40", "--set", "eps=0.5"], capsys)
    for name in ("fourth_moment.csv", "concentration.csv", "threshold.csv"):
        assert (out / name).exists(), name
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["outputs"] == ["fourth_moment.csv", "concentration.csv",
                                   "threshold.csv"]


def test_lan_output(tmp_path, capsys):
    out = tmp_path / "lan"
    run_ok(["lan", "--out-dir", str(out), "--set", "n_long=4096",
            "--set", "rep_n=1024", "--set", "replications=50",
            "--set", "long_replications=2", "--set", "nu=0.05"], capsys)
    lines = (out / "lan.csv").read_text().splitlines()
    assert lines[0] == LAN_HEADER
    quantities = [ln.split(",")[0] for ln in lines[1:]]
    assert quantities == ["quad_var", "score_mean", "score_var", "mollifier_sigma_sq"]
