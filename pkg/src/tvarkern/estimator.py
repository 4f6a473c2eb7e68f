"""Local kernel estimator of the autoregression coefficient at a point.

For a target location z0 inside (0, 1), the estimator weights design
points within bandwidth h of z0 by a kernel Q and returns

    value = sum Q(u_k) y_{k-1} y_k / sum Q(u_k) y_{k-1}^2,
    u_k = (x_k - z0) / h,

truncated to 0 whenever the denominator falls below the floor
trunc * n * h. The bandwidth, the normalizing rate, and the truncation
level are all powers of n derived from the smoothness degree beta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson

from .model import CoefFunction, Trajectory
from .util import kahan_sum

MOMENT1_GATE = 1e-10  # admissible kernels must balance to this


@dataclass(frozen=True)
class KernelSpec:
    """Validated kernel: q maps [-1, 1] to R and vanishes outside."""

    kernel_id: str
    q: Callable
    moment0: float  # integral of q over [-1, 1]
    moment1: float  # integral of z*q(z) over [-1, 1]


@dataclass(frozen=True)
class Schedule:
    """Derived estimation constants for one (n, beta, z0, gamma).

    rate is the normalizing rate n^(beta/(2 beta + 1)) and satisfies
    rate^2 = n*h. trunc = h^gamma vanishes while h/trunc^2 -> 0, and
    denom_floor = trunc * n * h is the truncation cutoff for the
    denominator. k_lo..k_hi bracket the design points with |u_k| <= 1.
    """

    n: int
    beta: float
    gamma: float
    z0: float
    h: float
    rate: float
    trunc: float
    denom_floor: float
    k_lo: int
    k_hi: int


def make_schedule(n: int, beta: float, z0: float, gamma: float = 0.25) -> Schedule:
    """Build the Schedule; rejects parameters outside the admissible set."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if not 1.0 <= beta < 2.0:
        raise ValueError("beta must lie in [1, 2)")
    if not 0.0 < gamma < 0.5:
        raise ValueError("gamma must lie in (0, 0.5)")
    if not 0.0 < z0 < 1.0:
        raise ValueError("z0 must lie in (0, 1)")
    expo = 1.0 / (2.0 * beta + 1.0)
    h = float(n) ** (-expo)
    rate = float(n) ** (beta * expo)
    if z0 - h <= 0.0 or z0 + h >= 1.0:
        raise ValueError(
            f"bandwidth window [z0-h, z0+h] = [{z0 - h:.6g}, {z0 + h:.6g}] "
            "must lie strictly inside (0, 1); increase n or move z0"
        )
    trunc = h**gamma
    denom_floor = trunc * (n * h)
    k_lo = math.floor(n * z0 - n * h) + 1
    k_hi = math.floor(n * z0 + n * h)
    return Schedule(n=n, beta=beta, gamma=gamma, z0=float(z0), h=h, rate=rate,
                    trunc=trunc, denom_floor=denom_floor, k_lo=k_lo, k_hi=k_hi)


def design_window(sched: Schedule) -> tuple[np.ndarray, np.ndarray]:
    """Indices k and scaled offsets u_k = (k/n - z0)/h with |u_k| <= 1.

    Every kernel vanishes outside [-1, 1], so sums over this window
    equal sums over all k = 1..n. The one-index guard on each side
    covers the case where n*z0 - n*h is an exact integer.
    """
    n, z0, h = sched.n, sched.z0, sched.h
    lo = max(1, sched.k_lo - 1)
    hi = min(n, sched.k_hi + 1)
    k = np.arange(lo, hi + 1)
    u = (k / n - z0) / h
    inside = np.abs(u) <= 1.0
    return k[inside], u[inside]


def _indicator(z):
    z = np.asarray(z, dtype=np.float64)
    return (np.abs(z) <= 1.0).astype(np.float64)


def _epanechnikov(z):
    z = np.asarray(z, dtype=np.float64)
    return np.where(np.abs(z) <= 1.0, 0.75 * (1.0 - z * z), 0.0)


def _quartic(z):
    z = np.asarray(z, dtype=np.float64)
    w = 1.0 - z * z
    return np.where(np.abs(z) <= 1.0, (15.0 / 16.0) * w * w, 0.0)


_KERNELS = {
    "indicator": _indicator,
    "epanechnikov": _epanechnikov,
    "quartic": _quartic,
}

KERNEL_IDS = tuple(_KERNELS)


def validate_kernel(q: Callable, kernel_id: str = "custom",
                    quad_nodes: int = 2001) -> KernelSpec:
    """Admit a kernel iff its integral is positive and its first moment
    balances to zero (composite Simpson on [-1, 1])."""
    if quad_nodes < 3 or quad_nodes % 2 == 0:
        raise ValueError("quad_nodes must be an odd integer >= 3")
    z = np.linspace(-1.0, 1.0, quad_nodes)
    qz = np.asarray(q(z), dtype=np.float64)
    moment0 = float(simpson(qz, x=z))
    moment1 = float(simpson(z * qz, x=z))
    if moment0 <= 0.0 or abs(moment1) > MOMENT1_GATE:
        raise ValueError(
            f"kernel {kernel_id!r} rejected: integral = {moment0:.6g} (must be > 0), "
            f"first moment = {moment1:.6g} (must be 0 within {MOMENT1_GATE:g})"
        )
    return KernelSpec(kernel_id=kernel_id, q=q, moment0=moment0, moment1=moment1)


def get_kernel(kernel_id: str, quad_nodes: int = 2001) -> KernelSpec:
    if kernel_id not in _KERNELS:
        raise ValueError(f"unknown kernel_id {kernel_id!r}; known: {', '.join(KERNEL_IDS)}")
    return validate_kernel(_KERNELS[kernel_id], kernel_id, quad_nodes)


@dataclass(frozen=True)
class EstimateResult:
    """Estimator output plus error-decomposition components.

    denom is the kernel-weighted sum of squared lags; denom_scaled is
    denom / rate^2; kept records denom >= denom_floor (the estimator
    returns 0 otherwise); inv_denom is 1/denom_scaled on the kept event
    and 0 otherwise. noise_term and bias_term are the rate-normalized
    martingale and local-drift sums, filled only in diagnostic mode
    (true coefficient and residuals available):

      value - S(z0) = -S(z0)*[not kept]
                      + inv_denom * noise_term / rate
                      + inv_denom * bias_term / rate .
    """

    value: float
    denom: float
    denom_scaled: float
    kept: bool
    inv_denom: float
    noise_term: Optional[float] = None
    bias_term: Optional[float] = None


def estimate(traj: Trajectory, z0: float, kernel: KernelSpec, sched: Schedule,
             coef: Optional[CoefFunction] = None) -> EstimateResult:
    """Point estimate at z0; diagnostic sums if `coef` is supplied.

    Work is O(n*h): only the design window contributes, because the
    kernel vanishes outside [-1, 1].
    """
    if sched.n != traj.n:
        raise ValueError(f"schedule is for n = {sched.n}, trajectory has n = {traj.n}")
    if z0 != sched.z0:
        raise ValueError(f"z0 = {z0} does not match the schedule's z0 = {sched.z0}")
    k, u = design_window(sched)
    q = np.asarray(kernel.q(u), dtype=np.float64)
    y_prev = traj.y[k - 1]
    y_cur = traj.y[k]
    denom = kahan_sum(q * y_prev * y_prev)
    cross = kahan_sum(q * y_prev * y_cur)
    kept = bool(denom >= sched.denom_floor)
    if kept and denom == 0.0:
        raise AssertionError("kept event with zero denominator cannot occur (floor > 0)")
    value = cross / denom if kept else 0.0
    rate_sq = sched.rate * sched.rate
    denom_scaled = denom / rate_sq
    inv_denom = 1.0 / denom_scaled if kept else 0.0

    noise_term = bias_term = None
    if coef is not None:
        if traj.residuals is None:
            raise ValueError("diagnostic mode needs a trajectory with residuals")
        xi = traj.residuals[k - 1]
        # Elementwise evaluation at the same k/n floats the simulator saw,
        # so the window values match the full-grid values bit for bit.
        s_win = np.asarray(coef.eval(k / traj.n), dtype=np.float64)
        s0 = float(np.asarray(coef.eval(np.float64(z0)), dtype=np.float64))
        drift_w = q * (s_win - s0)
        noise_term = kahan_sum(q * y_prev * xi) / sched.rate
        bias_term = kahan_sum(drift_w * y_prev * y_prev) / sched.rate
    return EstimateResult(value=value, denom=denom, denom_scaled=denom_scaled,
                          kept=kept, inv_denom=inv_denom,
                          noise_term=noise_term, bias_term=bias_term)


DECOMPOSITION_RTOL = 1e-10


def decomposition_residual(result: EstimateResult, s0: float, sched: Schedule) -> float:
    """Relative error of the exact error decomposition (see EstimateResult)."""
    if result.noise_term is None or result.bias_term is None:
        raise ValueError("decomposition needs a diagnostic-mode EstimateResult")
    lhs = result.value - s0
    rhs = -s0 * (0.0 if result.kept else 1.0)
    rhs += result.inv_denom * result.noise_term / sched.rate
    rhs += result.inv_denom * result.bias_term / sched.rate
    return abs(lhs - rhs) / (1.0 + abs(lhs))


def decompose(traj: Trajectory, coef: CoefFunction, z0: float,
              kernel: KernelSpec, sched: Schedule) -> EstimateResult:
    """Diagnostic estimate with the decomposition identity enforced."""
    if traj.residuals is None:
        raise ValueError("decompose needs a trajectory with residuals")
    result = estimate(traj, z0, kernel, sched, coef=coef)
    s0 = float(np.asarray(coef.eval(np.float64(z0)), dtype=np.float64))
    residual = decomposition_residual(result, s0, sched)
    if residual > DECOMPOSITION_RTOL:
        raise AssertionError(
            f"error decomposition violated: relative residual {residual:.3e} "
            f"exceeds {DECOMPOSITION_RTOL:g}"
        )
    return result


@dataclass(frozen=True)
class LanResult:
    """Quadratic characteristic, normalized score, and log likelihood
    ratio of the local quadratic experiment at amplitude `amp`."""

    quad_var: float
    score: float
    log_lr: float


def lan_statistics(traj: Trajectory, z0: float, shape: Callable,
                   sched: Schedule, amp: float) -> LanResult:
    """Local-asymptotic-normality statistics under the zero coefficient.

    quad_var = rate^-2 * sum shape(u_k)^2 y_{k-1}^2 and
    score = (sqrt(quad_var) * rate)^-1 * sum shape(u_k) y_{k-1} xi_k;
    log_lr = amp * sqrt(quad_var) * score - amp^2 * quad_var / 2.
    """
    if traj.coef_id not in ("", "zero"):
        raise ValueError(f"trajectory was generated under coef {traj.coef_id!r}, "
                         "but these statistics assume the zero coefficient")
    if traj.residuals is None:
        raise ValueError("trajectory carries no residuals")
    if sched.n != traj.n:
        raise ValueError(f"schedule is for n = {sched.n}, trajectory has n = {traj.n}")
    if z0 != sched.z0:
        raise ValueError(f"z0 = {z0} does not match the schedule's z0 = {sched.z0}")
    k, u = design_window(sched)
    v = np.asarray(shape(u), dtype=np.float64)
    y_prev = traj.y[k - 1]
    xi = traj.residuals[k - 1]
    rate_sq = sched.rate * sched.rate
    quad_var = kahan_sum(v * v * y_prev * y_prev) / rate_sq
    if quad_var == 0.0:
        raise ValueError("quadratic characteristic is zero; score undefined")
    scale = math.sqrt(quad_var)
    score = kahan_sum(v * y_prev * xi) / (scale * sched.rate)
    log_lr = amp * scale * score - amp * amp * quad_var / 2.0
    return LanResult(quad_var=quad_var, score=score, log_lr=log_lr)
