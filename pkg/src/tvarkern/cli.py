"""Command-line front end.

Each subcommand is a thin deterministic wrapper over the library: it
loads a JSON config, applies --set overrides, validates against a
strict per-subcommand schema (unknown keys are rejected), runs, and
writes CSV outputs plus a manifest.json echoing the fully resolved
config and its content hash. Identical invocations produce
byte-identical outputs, and any output directory can be rebuilt from
its manifest alone.

Exit codes: 0 success, 2 config or validation error (one line on
stderr), 1 runtime failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

from .estimator import estimate, get_kernel, make_schedule
from .mc import (ExperimentConfig, LanConfig, clt_diagnostic, efficiency,
                 lan_study, lemma_checks, mc_risk, rate_fit, validate_config)
from .model import load_trajectory, make_coef, noise_by_id, save_trajectory, simulate
from .util import thread_count, write_csv

RISK_HEADER = "coef_id,noise_id,n,mean_abs_err,normalized,ci_half,kept_fraction"
RATE_HEADER = "coef_id,slope,intercept,r_squared"
EFFICIENCY_HEADER = "n,ratio,target"
ESTIMATE_HEADER = "value,A_n,indicator,h,phi,kappa,d"
CLT_HEADER = "n,mean,variance,ks_stat"
FOURTH_MOMENT_HEADER = "coef_id,noise_id,n,max_fourth_moment,bound"
CONCENTRATION_HEADER = "n,mean_sq_deviation,normalized"
THRESHOLD_HEADER = "n,empty_fraction,empty_over_h_sq,inv_denom_fourth"
LAN_HEADER = "quantity,value,target"


class ConfigError(ValueError):
    """Config or schema violation; maps to exit code 2."""


# Schema entries: key -> (type, required, default). Types: "int",
# "float" (int accepted), "str", "str_list", "int_list".

_EXPERIMENT_SCHEMA = {
    "coef_ids": ("str_list", True, None),
    "noise_ids": ("str_list", True, None),
    "n_grid": ("int_list", True, None),
    "replications": ("int", True, None),
    "z0": ("float", False, 0.5),
    "beta": ("float", False, 1.0),
    "gamma": ("float", False, 0.25),
    "kernel_id": ("str", False, "indicator"),
    "root_seed": ("int", False, 0),
    "y0": ("float", False, 0.0),
    "sigma_star": ("float", False, 9.0),
    "eps": ("float", False, 0.25),
}

SCHEMAS = {
    "simulate": {
        "coef_id": ("str", True, None),
        "noise_id": ("str", True, None),
        "n": ("int", True, None),
        "seed": ("int", True, None),
        "z0": ("float", False, 0.5),
        "y0": ("float", False, 0.0),
        "sigma_star": ("float", False, 9.0),
    },
    "estimate": {
        "trajectory": ("str", True, None),
        "z0": ("float", False, 0.5),
        "beta": ("float", False, 1.0),
        "gamma": ("float", False, 0.25),
        "kernel_id": ("str", False, "indicator"),
    },
    "risk": _EXPERIMENT_SCHEMA,
    "rate": _EXPERIMENT_SCHEMA,
    "efficiency": _EXPERIMENT_SCHEMA,
    "clt": _EXPERIMENT_SCHEMA,
    "lemmas": _EXPERIMENT_SCHEMA,
    "lan": {
        "n_long": ("int", False, 1_000_000),
        "rep_n": ("int", False, 100_000),
        "replications": ("int", False, 10_000),
        "long_replications": ("int", False, 16),
        "nu": ("float", False, 0.01),
        "z0": ("float", False, 0.5),
        "beta": ("float", False, 1.0),
        "gamma": ("float", False, 0.25),
        "root_seed": ("int", False, 0),
    },
}


_KIND_DESC = {
    "int": "an integer",
    "float": "a number",
    "str": "a string",
    "str_list": "a list of strings",
    "int_list": "a list of integers",
}


def _coerce(sub: str, key: str, kind: str, value):
    fail = ConfigError(f"config key {key!r} for subcommand {sub!r} "
                       f"must be {_KIND_DESC[kind]}")
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise fail
        return int(value)
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise fail
        return float(value)
    if kind == "str":
        if not isinstance(value, str):
            raise fail
        return value
    if kind == "str_list":
        if not isinstance(value, (list, tuple)) or any(not isinstance(v, str) for v in value):
            raise fail
        return list(value)
    if kind == "int_list":
        if (not isinstance(value, (list, tuple))
                or any(isinstance(v, bool) or not isinstance(v, int) for v in value)):
            raise fail
        return [int(v) for v in value]
    raise AssertionError(f"unhandled schema type {kind!r}")


def _parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"--set expects KEY=VALUE, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw  # bare strings need no quoting
    return key, value


def _resolve_config(sub: str, config_path, overrides) -> dict:
    schema = SCHEMAS[sub]
    raw = {}
    if config_path is not None:
        with open(config_path, "r") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError(f"{config_path}: config must be a JSON object")
    for text in overrides:
        key, value = _parse_override(text)
        raw[key] = value
    conf = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"unknown config key {key!r} for subcommand {sub!r}")
        conf[key] = _coerce(sub, key, schema[key][0], value)
    for key, (kind, required, default) in schema.items():
        if key in conf:
            continue
        if required:
            raise ConfigError(f"missing required config key {key!r} for subcommand {sub!r}")
        conf[key] = default
    return conf


# Each _prep_* validates everything it can (raising toward exit 2) and
# returns an execute(out_dir) -> outputs thunk for the run phase.

def _prep_simulate(conf):
    if not 0.0 < conf["z0"] < 1.0:
        raise ConfigError("z0 must lie in (0, 1)")
    if conf["n"] < 1:
        raise ConfigError("n must be a positive integer")
    coef = make_coef(conf["coef_id"], conf["z0"])
    noise = noise_by_id(conf["noise_id"], conf["sigma_star"])

    def execute(out_dir):
        traj = simulate(coef, noise, conf["n"], conf["y0"], conf["seed"])
        save_trajectory(traj, os.path.join(out_dir, "trajectory.csv"))
        return ["trajectory.csv"]
    return execute


def _prep_estimate(conf):
    traj = load_trajectory(conf["trajectory"])
    kernel = get_kernel(conf["kernel_id"])
    sched = make_schedule(traj.n, conf["beta"], conf["z0"], conf["gamma"])

    def execute(out_dir):
        res = estimate(traj, conf["z0"], kernel, sched)
        write_csv(os.path.join(out_dir, "estimate.csv"), ESTIMATE_HEADER,
                  [(res.value, res.denom, res.kept,
                    sched.h, sched.rate, sched.trunc, sched.denom_floor)])
        return ["estimate.csv"]
    return execute


def _write_risk(out_dir, report):
    write_csv(os.path.join(out_dir, "risk.csv"), RISK_HEADER,
              [(r.coef_id, r.noise_id, r.n, r.mean_abs_err, r.normalized,
                r.ci_half, r.kept_fraction) for r in report.rows])


def _prep_risk(conf):
    cfg = ExperimentConfig(**conf)
    validate_config(cfg, "risk")

    def execute(out_dir):
        _write_risk(out_dir, mc_risk(cfg))
        return ["risk.csv"]
    return execute


def _prep_rate(conf):
    cfg = ExperimentConfig(**conf)
    validate_config(cfg, "rate")

    def execute(out_dir):
        report = mc_risk(cfg)
        _write_risk(out_dir, report)
        fits = [rate_fit(report, cid) for cid in cfg.coef_ids]
        write_csv(os.path.join(out_dir, "rate.csv"), RATE_HEADER,
                  [(f.coef_id, f.slope, f.intercept, f.r_squared) for f in fits])
        return ["risk.csv", "rate.csv"]
    return execute


def _prep_efficiency(conf):
    cfg = ExperimentConfig(**conf)
    validate_config(cfg, "efficiency")

    def execute(out_dir):
        report = efficiency(cfg)
        write_csv(os.path.join(out_dir, "efficiency.csv"), EFFICIENCY_HEADER,
                  [(r.n, r.ratio, r.target) for r in report.rows])
        return ["efficiency.csv"]
    return execute


def _prep_clt(conf):
    cfg = ExperimentConfig(**conf)
    validate_config(cfg, "clt")

    def execute(out_dir):
        report = clt_diagnostic(cfg)
        write_csv(os.path.join(out_dir, "clt.csv"), CLT_HEADER,
                  [(r.n, r.mean, r.variance, r.ks_stat) for r in report.rows])
        return ["clt.csv"]
    return execute


def _prep_lemmas(conf):
    cfg = ExperimentConfig(**conf)
    validate_config(cfg, "lemmas")

    def execute(out_dir):
        report = lemma_checks(cfg)
        write_csv(os.path.join(out_dir, "fourth_moment.csv"), FOURTH_MOMENT_HEADER,
                  [(r.coef_id, r.noise_id, r.n, r.max_fourth_moment, r.bound)
                   for r in report.fourth_moment])
        write_csv(os.path.join(out_dir, "concentration.csv"), CONCENTRATION_HEADER,
                  [(r.n, r.mean_sq_deviation, r.normalized)
                   for r in report.concentration])
        write_csv(os.path.join(out_dir, "threshold.csv"), THRESHOLD_HEADER,
                  [(r.n, r.empty_fraction, r.empty_over_h_sq, r.inv_denom_fourth)
                   for r in report.threshold])
        return ["fourth_moment.csv", "concentration.csv", "threshold.csv"]
    return execute


def _prep_lan(conf):
    cfg = LanConfig(**conf)
    if not 0.0 < cfg.nu < 0.25:
        raise ConfigError("nu must lie in (0, 0.25)")
    make_schedule(cfg.n_long, cfg.beta, cfg.z0, cfg.gamma)
    make_schedule(cfg.rep_n, cfg.beta, cfg.z0, cfg.gamma)

    def execute(out_dir):
        rows = lan_study(cfg)
        write_csv(os.path.join(out_dir, "lan.csv"), LAN_HEADER,
                  [(r.quantity, r.value, r.target) for r in rows])
        return ["lan.csv"]
    return execute


_PREP = {
    "simulate": _prep_simulate,
    "estimate": _prep_estimate,
    "risk": _prep_risk,
    "rate": _prep_rate,
    "efficiency": _prep_efficiency,
    "clt": _prep_clt,
    "lemmas": _prep_lemmas,
    "lan": _prep_lan,
}


def _write_manifest(out_dir, sub: str, conf: dict, outputs) -> None:
    canonical = json.dumps(conf, sort_keys=True, separators=(",", ":"))
    manifest = {
        "subcommand": sub,
        "config": conf,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "outputs": list(outputs),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", newline="") as fh:
        fh.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvarkern",
        description="Simulation and estimation toolkit for a time-varying "
                    "first-order autoregression with a windowed kernel "
                    "estimator of the coefficient at a point.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    helps = {
        "simulate": "draw one trajectory and write trajectory.csv",
        "estimate": "estimate the coefficient at z0 from a trajectory CSV",
        "risk": "Monte Carlo risk table over a (coefficient, noise, n) grid",
        "rate": "risk table plus log-log convergence-rate fits",
        "efficiency": "normalized risk against the sqrt(1/pi) constant",
        "clt": "moments and KS distance of the scaled martingale term",
        "lemmas": "fourth-moment, concentration, and threshold diagnostics",
        "lan": "local-experiment diagnostics and the smoothed indicator",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--out-dir", default=".",
                       help="output directory, created if absent (default: .)")
        p.add_argument("--set", action="append", default=[], dest="overrides",
                       metavar="KEY=VALUE",
                       help="override one config key (value parsed as JSON, "
                            "else taken as a bare string)")
    return parser


def run(argv=None) -> int:
    """Entry point; returns the process exit code instead of raising."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        conf = _resolve_config(args.subcommand, args.config, args.overrides)
        thread_count()  # malformed TVARKERN_THREADS is a config error
        execute = _PREP[args.subcommand](conf)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        os.makedirs(args.out_dir, exist_ok=True)
        outputs = execute(args.out_dir)
        _write_manifest(args.out_dir, args.subcommand, conf, outputs)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
