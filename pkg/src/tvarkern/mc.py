"""Monte Carlo harness.

Estimates the pointwise risk E|value - S(z0)| over a panel of noise
densities, fits log-log convergence rates, measures the normalized risk
against the half-normal constant sqrt(1/pi), and runs the moment,
concentration, threshold, and distribution diagnostics the acceptance
gates rely on.

All randomness derives from (root_seed, cell label, replication index)
through a 64-bit mixer, and lane results are reduced in replication
order, so every report is a pure function of its config: worker count
and chunking never change a byte of output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.integrate import simpson

from .classes import (check_stability, inv_stationary_var, mollified_indicator,
                      quartic_shape, shape_integral)
from .engine import CHUNK_ELEMS, WeightedSum, fourth_moment_profile, window_sums
from .estimator import design_window, get_kernel, make_schedule
from .model import fourth_moment_bound, make_coef, noise_by_id
from .rng import replication_seed

EFFICIENCY_TARGET = math.sqrt(1.0 / math.pi)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: which coefficients, noises, and sample sizes to
    cross, how many replications per cell, and the estimation
    parameters shared by every cell."""

    coef_ids: tuple
    noise_ids: tuple
    n_grid: tuple
    replications: int
    z0: float = 0.5
    beta: float = 1.0
    gamma: float = 0.25
    kernel_id: str = "indicator"
    root_seed: int = 0
    y0: float = 0.0
    sigma_star: float = 9.0
    eps: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "coef_ids", tuple(self.coef_ids))
        object.__setattr__(self, "noise_ids", tuple(self.noise_ids))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "replications", int(self.replications))
        object.__setattr__(self, "root_seed", int(self.root_seed))
        if not self.coef_ids:
            raise ValueError("coef_ids must be nonempty")
        if not self.noise_ids:
            raise ValueError("noise_ids must be nonempty")
        if not self.n_grid:
            raise ValueError("n_grid must be nonempty")
        if self.n_grid[0] < 1:
            raise ValueError("n_grid entries must be positive integers")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if self.replications < 1:
            raise ValueError("replications must be a positive integer")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")


def cell_label(coef_id: str, noise_id: str, n: int) -> str:
    return f"{coef_id}|{noise_id}|{n}"


def cell_seeds(config: ExperimentConfig, coef_id: str, noise_id: str, n: int) -> list:
    """Replication seeds for one cell; partition-independent by design."""
    label = cell_label(coef_id, noise_id, n)
    return [replication_seed(config.root_seed, label, r)
            for r in range(config.replications)]


def _resolve(config: ExperimentConfig):
    # Build every kernel, coefficient, noise, and schedule up front so
    # invalid parameters surface before any simulation runs.
    kernel = get_kernel(config.kernel_id)
    coefs = {cid: make_coef(cid, config.z0) for cid in config.coef_ids}
    noises = {nid: noise_by_id(nid, config.sigma_star) for nid in config.noise_ids}
    scheds = {n: make_schedule(n, config.beta, config.z0, config.gamma)
              for n in config.n_grid}
    return kernel, coefs, noises, scheds


def validate_config(config: ExperimentConfig, op: str = "risk") -> None:
    """Fail fast: build every component the operation will use.

    op names the extra preconditions to enforce: "rate" needs at least
    4 grid points, "efficiency" and "clt" need the indicator kernel and
    a single cell, "lemmas" needs every coefficient inside the
    stability set at config.eps.
    """
    _, coefs, _, _ = _resolve(config)
    if op == "rate" and len(config.n_grid) < 4:
        raise ValueError("rate fit requires at least 4 distinct n values")
    if op in ("efficiency", "clt") and config.kernel_id != "indicator":
        raise ValueError(
            f"{op} requires the indicator kernel, got {config.kernel_id!r}")
    if op == "efficiency" and len(config.coef_ids) != 1:
        raise ValueError("efficiency requires exactly one coefficient function")
    if op == "clt" and (len(config.coef_ids) != 1 or len(config.noise_ids) != 1):
        raise ValueError("clt diagnostic uses a single (coefficient, noise) cell")
    if op == "lemmas":
        for cid, coef in coefs.items():
            if not check_stability(coef, config.eps):
                raise ValueError(
                    f"coefficient {cid!r} leaves the stability set at eps = {config.eps}")


@dataclass(frozen=True)
class RiskRow:
    coef_id: str
    noise_id: str
    n: int
    mean_abs_err: float
    normalized: float  # rate * mean_abs_err
    ci_half: float     # 1.96 * stderr of |err|
    kept_fraction: float


@dataclass(frozen=True)
class RiskReport:
    """Per-cell risk rows plus panel_sup, the max of mean_abs_err over
    the noise panel, keyed by (coef_id, n)."""

    config: ExperimentConfig
    rows: tuple
    panel_sup: dict


def mc_risk(config: ExperimentConfig, workers: int | None = None,
            chunk_elems: int = CHUNK_ELEMS) -> RiskReport:
    """Risk table over all (coefficient, noise, n) cells.

    Each cell runs config.replications independent trajectories with
    derived per-replication seeds; the per-replication estimate equals
    the scalar path bit for bit, and rows appear in config order.
    """
    kernel, coefs, noises, scheds = _resolve(config)
    rows = []
    for cid in config.coef_ids:
        coef = coefs[cid]
        s0 = float(np.asarray(coef.eval(np.float64(config.z0)), dtype=np.float64))
        for nid in config.noise_ids:
            for n in config.n_grid:
                sched = scheds[n]
                _, u = design_window(sched)
                q = np.asarray(kernel.q(u), dtype=np.float64)
                seeds = cell_seeds(config, cid, nid, n)
                sums = window_sums(
                    coef, noises[nid], n, config.y0, seeds, sched,
                    [WeightedSum("denom", "yy", q), WeightedSum("cross", "ycur", q)],
                    workers=workers, chunk_elems=chunk_elems)
                denom, cross = sums["denom"], sums["cross"]
                kept = denom >= sched.denom_floor
                value = np.zeros(denom.size)
                np.divide(cross, denom, out=value, where=kept)
                err = np.abs(value - s0)
                mean_abs = float(np.mean(err))
                sd = float(np.std(err, ddof=1)) if err.size > 1 else 0.0
                rows.append(RiskRow(
                    coef_id=cid, noise_id=nid, n=n,
                    mean_abs_err=mean_abs,
                    normalized=sched.rate * mean_abs,
                    ci_half=1.96 * sd / math.sqrt(err.size),
                    kept_fraction=float(np.mean(kept))))
    panel_sup = {}
    for row in rows:
        key = (row.coef_id, row.n)
        panel_sup[key] = max(panel_sup.get(key, 0.0), row.mean_abs_err)
    return RiskReport(config=config, rows=tuple(rows), panel_sup=panel_sup)


@dataclass(frozen=True)
class RateFit:
    coef_id: str
    slope: float
    intercept: float
    r_squared: float


def rate_fit(report: RiskReport, coef_id: str) -> RateFit:
    """Least-squares fit of log panel_sup against log n.

    The slope estimates the negative rate exponent -beta/(2 beta + 1).
    """
    if coef_id not in report.config.coef_ids:
        raise ValueError(f"coef_id {coef_id!r} not present in the report")
    ns = report.config.n_grid
    if len(ns) < 4:
        raise ValueError("rate fit requires at least 4 distinct n values")
    sups = np.array([report.panel_sup[(coef_id, n)] for n in ns])
    if np.any(sups <= 0.0):
        raise ValueError("panel_sup must be positive to fit on a log scale")
    log_n = np.log(np.asarray(ns, dtype=np.float64))
    log_r = np.log(sups)
    slope, intercept = np.polyfit(log_n, log_r, 1)
    resid = log_r - (slope * log_n + intercept)
    ss_tot = float(np.sum((log_r - np.mean(log_r)) ** 2))
    r_sq = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid * resid)) / ss_tot
    return RateFit(coef_id=coef_id, slope=float(slope),
                   intercept=float(intercept), r_squared=r_sq)


@dataclass(frozen=True)
class EfficiencyRow:
    n: int
    ratio: float
    target: float


@dataclass(frozen=True)
class EfficiencyReport:
    config: ExperimentConfig
    rows: tuple


def efficiency(config: ExperimentConfig, workers: int | None = None,
               chunk_elems: int = CHUNK_ELEMS) -> EfficiencyReport:
    """Normalized risk against the sharp constant sqrt(1/pi).

    ratio(n) = rate * panel_sup / sqrt(1 - S(z0)^2). Only the plain
    moving-window (indicator) kernel attains the sharp constant, so any
    other kernel is rejected.
    """
    validate_config(config, "efficiency")
    report = mc_risk(config, workers=workers, chunk_elems=chunk_elems)
    cid = config.coef_ids[0]
    tau = inv_stationary_var(make_coef(cid, config.z0), config.z0)
    scale = 1.0 / math.sqrt(tau)
    rows = []
    for n in config.n_grid:
        sched = make_schedule(n, config.beta, config.z0, config.gamma)
        rows.append(EfficiencyRow(n=n,
                                  ratio=scale * sched.rate * report.panel_sup[(cid, n)],
                                  target=EFFICIENCY_TARGET))
    return EfficiencyReport(config=config, rows=tuple(rows))


@dataclass(frozen=True)
class CltRow:
    n: int
    mean: float
    variance: float
    ks_stat: float


@dataclass(frozen=True)
class CltReport:
    config: ExperimentConfig
    rows: tuple


def clt_diagnostic(config: ExperimentConfig, workers: int | None = None,
                   chunk_elems: int = CHUNK_ELEMS) -> CltReport:
    """Distribution check for the scaled martingale term.

    Collects sqrt(tau/2) * noise_term per replication, where noise_term
    is the rate-normalized window sum of q(u_k) y_{k-1} xi_k, and
    reports its first two moments and the Kolmogorov-Smirnov distance
    to the standard normal. The sqrt(tau/2) scaling is calibrated to
    the indicator kernel (squared integral 2), so other kernels are
    rejected. KS is diagnostic only; moment checks gate acceptance.
    """
    validate_config(config, "clt")
    kernel, coefs, noises, scheds = _resolve(config)
    cid, nid = config.coef_ids[0], config.noise_ids[0]
    coef, noise = coefs[cid], noises[nid]
    scale = math.sqrt(inv_stationary_var(coef, config.z0) / 2.0)
    rows = []
    for n in config.n_grid:
        sched = scheds[n]
        _, u = design_window(sched)
        q = np.asarray(kernel.q(u), dtype=np.float64)
        seeds = cell_seeds(config, cid, nid, n)
        sums = window_sums(coef, noise, n, config.y0, seeds, sched,
                           [WeightedSum("noise", "yxi", q)],
                           workers=workers, chunk_elems=chunk_elems)
        z = scale * (sums["noise"] / sched.rate)
        rows.append(CltRow(n=n, mean=float(np.mean(z)),
                           variance=float(np.var(z, ddof=1)),
                           ks_stat=float(stats.kstest(z, "norm").statistic)))
    return CltReport(config=config, rows=tuple(rows))


@dataclass(frozen=True)
class FourthMomentRow:
    coef_id: str
    noise_id: str
    n: int
    max_fourth_moment: float
    bound: float


@dataclass(frozen=True)
class ConcentrationRow:
    n: int
    mean_sq_deviation: float
    normalized: float


@dataclass(frozen=True)
class ThresholdRow:
    n: int
    empty_fraction: float
    empty_over_h_sq: float
    inv_denom_fourth: float


@dataclass(frozen=True)
class LemmaReport:
    config: ExperimentConfig
    fourth_moment: tuple
    concentration: tuple
    threshold: tuple


LEMMA_PARTS = ("fourth_moment", "concentration", "threshold")


def lemma_checks(config: ExperimentConfig, workers: int | None = None,
                 chunk_elems: int = CHUNK_ELEMS,
                 parts=LEMMA_PARTS) -> LemmaReport:
    """Empirical moment, concentration, and threshold diagnostics.

    fourth_moment: per cell, the max over k of the Monte Carlo
    E[y_k^4], against the closed-form cap 8 y0^4 + 8 sigma_star / eps^4
    that holds whenever sup|S| <= 1 - eps (checked first).

    concentration: with f the quartic taper (1-u^2)^2 and the first
    listed coefficient and noise, the window average
    rho = rate^-2 sum f(u_k) y_{k-1}^2 - integral(f) / (1 - S(z0)^2)
    concentrates at scale R*h, R = sup|f| + sup|f'|; the normalized
    column E[rho^2] / (R h)^2 should stay bounded along n_grid.

    threshold: empty_fraction = P(denom < denom_floor), its ratio to
    h^2, and E[inv_denom^4]; both ratios should stay bounded.
    """
    validate_config(config, "lemmas")
    unknown = set(parts) - set(LEMMA_PARTS)
    if unknown:
        raise ValueError(f"unknown lemma parts: {sorted(unknown)!r}")
    kernel, coefs, noises, scheds = _resolve(config)
    bound = fourth_moment_bound(config.eps, config.sigma_star, config.y0)

    fourth = []
    if "fourth_moment" in parts:
        for cid in config.coef_ids:
            for nid in config.noise_ids:
                for n in config.n_grid:
                    seeds = cell_seeds(config, cid, nid, n)
                    profile = fourth_moment_profile(
                        coefs[cid], noises[nid], n, config.y0, seeds,
                        workers=workers, chunk_elems=chunk_elems)
                    fourth.append(FourthMomentRow(cid, nid, n, float(np.max(profile)), bound))

    concentration = []
    threshold = []
    if "concentration" in parts or "threshold" in parts:
        cid, nid = config.coef_ids[0], config.noise_ids[0]
        coef, noise = coefs[cid], noises[nid]
        tau = inv_stationary_var(coef, config.z0)
        shape = quartic_shape()
        f_int = shape_integral(shape)
        grid = np.linspace(-1.0, 1.0, 10_001)
        r_const = float(np.max(np.abs(np.asarray(shape.v(grid))))
                        + np.max(np.abs(np.asarray(shape.dv(grid)))))

        for n in config.n_grid:
            sched = scheds[n]
            _, u = design_window(sched)
            seeds = cell_seeds(config, cid, nid, n)
            request = []
            if "threshold" in parts:
                q = np.asarray(kernel.q(u), dtype=np.float64)
                request.append(WeightedSum("denom", "yy", q))
            if "concentration" in parts:
                fw = np.asarray(shape.v(u), dtype=np.float64)
                request.append(WeightedSum("taper", "yy", fw))
            sums = window_sums(coef, noise, n, config.y0, seeds, sched,
                               request, workers=workers, chunk_elems=chunk_elems)
            rate_sq = sched.rate * sched.rate

            if "concentration" in parts:
                rho = sums["taper"] / rate_sq - f_int / tau
                mean_sq = float(np.mean(rho * rho))
                concentration.append(ConcentrationRow(
                    n=n, mean_sq_deviation=mean_sq,
                    normalized=mean_sq / (r_const * sched.h) ** 2))

            if "threshold" in parts:
                denom = sums["denom"]
                denom_scaled = denom / rate_sq
                kept = denom >= sched.denom_floor
                inv_denom = np.zeros(denom.size)
                np.divide(1.0, denom_scaled, out=inv_denom, where=kept)
                empty = 1.0 - float(np.mean(kept))
                threshold.append(ThresholdRow(
                    n=n, empty_fraction=empty,
                    empty_over_h_sq=empty / (sched.h * sched.h),
                    inv_denom_fourth=float(np.mean(inv_denom**4))))
    return LemmaReport(config=config, fourth_moment=tuple(fourth),
                       concentration=tuple(concentration),
                       threshold=tuple(threshold))


@dataclass(frozen=True)
class LanConfig:
    """Parameters for the local-experiment diagnostics: one long run
    for the quadratic characteristic, a replicated run for the score,
    and the smoothed two-level indicator's squared integral."""

    n_long: int = 1_000_000
    rep_n: int = 100_000
    replications: int = 10_000
    long_replications: int = 16
    nu: float = 0.01
    z0: float = 0.5
    beta: float = 1.0
    gamma: float = 0.25
    root_seed: int = 0

    def __post_init__(self):
        for name in ("n_long", "rep_n", "replications", "long_replications",
                     "root_seed"):
            object.__setattr__(self, name, int(getattr(self, name)))
        for name in ("n_long", "rep_n", "replications", "long_replications"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")


@dataclass(frozen=True)
class LanRow:
    quantity: str
    value: float
    target: float


def lan_study(config: LanConfig, workers: int | None = None,
              chunk_elems: int = CHUNK_ELEMS) -> tuple:
    """Local-asymptotic-normality diagnostics under the zero coefficient
    with Gaussian noise.

    Rows: quad_var (mean quadratic characteristic at n_long, target the
    squared integral of the quartic taper), score_mean (target 0),
    score_var (target 1), and mollifier_sigma_sq (squared integral of
    the smoothed two-level indicator at scale nu, target its small-nu
    limit 2).
    """
    shape = quartic_shape()
    coef = make_coef("zero", config.z0)
    noise = noise_by_id("gaussian")
    z = np.linspace(-1.0, 1.0, 2001)
    vz = np.asarray(shape.v(z), dtype=np.float64)
    vv_int = float(simpson(vz * vz, x=z))

    sched_long = make_schedule(config.n_long, config.beta, config.z0, config.gamma)
    _, u = design_window(sched_long)
    w = np.asarray(shape.v(u), dtype=np.float64)
    seeds = [replication_seed(config.root_seed, f"lan|long|{config.n_long}", r)
             for r in range(config.long_replications)]
    sums = window_sums(coef, noise, config.n_long, 0.0, seeds, sched_long,
                       [WeightedSum("vv", "yy", w * w)],
                       workers=workers, chunk_elems=chunk_elems)
    quad_long = float(np.mean(sums["vv"] / (sched_long.rate * sched_long.rate)))

    sched_rep = make_schedule(config.rep_n, config.beta, config.z0, config.gamma)
    _, u = design_window(sched_rep)
    w = np.asarray(shape.v(u), dtype=np.float64)
    seeds = [replication_seed(config.root_seed, f"lan|score|{config.rep_n}", r)
             for r in range(config.replications)]
    sums = window_sums(coef, noise, config.rep_n, 0.0, seeds, sched_rep,
                       [WeightedSum("vv", "yy", w * w),
                        WeightedSum("vxi", "yxi", w)],
                       workers=workers, chunk_elems=chunk_elems)
    quad = sums["vv"] / (sched_rep.rate * sched_rep.rate)
    score = sums["vxi"] / sched_rep.rate / np.sqrt(quad)
    _, sigma_sq = mollified_indicator(config.nu)
    return (
        LanRow("quad_var", quad_long, vv_int),
        LanRow("score_mean", float(np.mean(score)), 0.0),
        LanRow("score_var", float(np.var(score, ddof=1)), 1.0),
        LanRow("mollifier_sigma_sq", sigma_sq, 2.0),
    )
