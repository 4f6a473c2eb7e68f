"""Coefficient function classes and local perturbation fixtures.

Membership checks for the stability set (sup |S| <= 1 - eps) and for
local smoothness classes defined through the derivative's Holder
modulus or through a window-averaged deviation integral, plus two
constructions used to probe estimation risk: a vanishing local bump
family and a smoothed two-level indicator.

Analytic suprema are replaced by suprema over documented uniform grids
(default 10^4 points) and integrals by composite Simpson quadrature
(default 2001 nodes); both surrogates are deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .estimator import make_schedule
from .model import CoefFunction

GRID_POINTS = 10_000
QUAD_NODES = 2001


def _grid(points: int) -> np.ndarray:
    if points < 2:
        raise ValueError("grid_points must be at least 2")
    return np.linspace(0.0, 1.0, points)


def check_stability(coef: CoefFunction, eps: float,
                    grid_points: int = GRID_POINTS) -> bool:
    """True iff max |S| over the uniform grid is at most 1 - eps."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    x = _grid(grid_points)
    return bool(np.max(np.abs(np.asarray(coef.eval(x), dtype=np.float64))) <= 1.0 - eps)


def holder_constant(coef: CoefFunction, z0: float, alpha: float,
                    grid_points: int = GRID_POINTS) -> float:
    """Grid supremum of |S'(x) - S'(z0)| / |x - z0|^alpha over x != z0."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    if not 0.0 < z0 < 1.0:
        raise ValueError("z0 must lie in (0, 1)")
    x = _grid(grid_points)
    x = x[x != z0]
    num = np.abs(np.asarray(coef.deriv(x), dtype=np.float64)
                 - float(np.asarray(coef.deriv(np.float64(z0)))))
    return float(np.max(num / np.abs(x - z0) ** alpha))


def window_deviation_integral(coef: CoefFunction, z0: float, h: float,
                              quad_nodes: int = QUAD_NODES) -> float:
    """Integral over u in [-1, 1] of S(z0 + u*h) - S(z0), by Simpson.

    This window-averaged deviation is the bias functional the weak
    smoothness class constrains.
    """
    if h <= 0.0:
        raise ValueError("h must be positive")
    if z0 - h < 0.0 or z0 + h > 1.0:
        raise ValueError(
            f"window [z0-h, z0+h] = [{z0 - h:.6g}, {z0 + h:.6g}] leaves [0, 1]"
        )
    if quad_nodes < 3 or quad_nodes % 2 == 0:
        raise ValueError("quad_nodes must be an odd integer >= 3")
    u = np.linspace(-1.0, 1.0, quad_nodes)
    s0 = float(np.asarray(coef.eval(np.float64(z0)), dtype=np.float64))
    vals = np.asarray(coef.eval(z0 + u * h), dtype=np.float64) - s0
    return float(simpson(vals, x=u))


@dataclass(frozen=True)
class HolderSpec:
    """Stable local Holder class parameters: members satisfy
    sup|S| <= 1 - eps, sup|S'| <= holder_bound, and the derivative's
    Holder-alpha modulus at z0 is at most holder_bound, alpha = beta - 1."""

    z0: float
    beta: float
    holder_bound: float  # K
    eps: float

    def __post_init__(self):
        if not 1.0 <= self.beta < 2.0:
            raise ValueError("beta must lie in [1, 2)")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.holder_bound <= 0.0:
            raise ValueError("holder_bound must be positive")
        if not 0.0 < self.z0 < 1.0:
            raise ValueError("z0 must lie in (0, 1)")

    @property
    def alpha(self) -> float:
        return self.beta - 1.0


@dataclass(frozen=True)
class WeakHolderSpec:
    """Weak (n-dependent) smoothness class parameters: sup|S| <= 1 - eps,
    sup|S'| <= 1/delta, and |window deviation integral| <= delta * h^beta
    at the bandwidth h = n^(-1/(2 beta + 1))."""

    z0: float
    beta: float
    delta: float
    eps: float
    n: int

    def __post_init__(self):
        if not 1.0 <= self.beta < 2.0:
            raise ValueError("beta must lie in [1, 2)")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if self.n < 1:
            raise ValueError("n must be a positive integer")

    @property
    def h(self) -> float:
        return float(self.n) ** (-1.0 / (2.0 * self.beta + 1.0))


def check_weak_membership(coef: CoefFunction, spec: WeakHolderSpec,
                          grid_points: int = GRID_POINTS,
                          quad_nodes: int = QUAD_NODES) -> bool:
    """Membership in the weak class: stability, derivative cap, and the
    window deviation bound, all evaluated at the class's own bandwidth."""
    if not check_stability(coef, spec.eps, grid_points):
        return False
    x = _grid(grid_points)
    if float(np.max(np.abs(np.asarray(coef.deriv(x), dtype=np.float64)))) > 1.0 / spec.delta:
        return False
    dev = window_deviation_integral(coef, spec.z0, spec.h, quad_nodes)
    return abs(dev) <= spec.delta * spec.h**spec.beta


@dataclass(frozen=True)
class BumpShape:
    """Twice continuously differentiable bump on [-1, 1], zero outside,
    with positive integral; curvature supplied analytically."""

    shape_id: str
    v: Callable
    dv: Callable
    ddv: Callable


def quartic_shape() -> BumpShape:
    def v(z):
        z = np.asarray(z, dtype=np.float64)
        w = 1.0 - z * z
        return np.where(np.abs(z) <= 1.0, w * w, 0.0)

    def dv(z):
        z = np.asarray(z, dtype=np.float64)
        return np.where(np.abs(z) <= 1.0, -4.0 * z * (1.0 - z * z), 0.0)

    def ddv(z):
        z = np.asarray(z, dtype=np.float64)
        return np.where(np.abs(z) <= 1.0, 12.0 * z * z - 4.0, 0.0)

    return BumpShape("quartic", v, dv, ddv)


def shape_integral(shape: BumpShape, quad_nodes: int = QUAD_NODES) -> float:
    z = np.linspace(-1.0, 1.0, quad_nodes)
    return float(simpson(np.asarray(shape.v(z), dtype=np.float64), x=z))


def shape_curvature_max(shape: BumpShape, grid_points: int = GRID_POINTS) -> float:
    """Max |v''| over [-1, 1]; the analytic ddv evaluated on a grid."""
    z = np.linspace(-1.0, 1.0, grid_points)
    return float(np.max(np.abs(np.asarray(shape.ddv(z), dtype=np.float64))))


@dataclass(frozen=True)
class BumpSpec:
    """Local perturbation family parameters.

    The member is amp/rate * V((x - z0)/h) with rate and h derived from
    (n, beta). holder_bound caps the admissible amplitude through the
    shape's curvature: |amp| <= holder_bound / max|V''|.
    """

    shape: BumpShape
    amp: float
    n: int
    beta: float
    z0: float
    holder_bound: float = 1.0

    def __post_init__(self):
        for probe in (1.0 + 1e-9, -1.0 - 1e-9):
            if float(np.asarray(self.shape.v(probe))) != 0.0:
                raise ValueError(f"shape {self.shape.shape_id!r} must vanish for |z| >= 1")
        if shape_integral(self.shape) <= 0.0:
            raise ValueError(f"shape {self.shape.shape_id!r} must have positive integral")
        if self.holder_bound <= 0.0:
            raise ValueError("holder_bound must be positive")


def bump_function(spec: BumpSpec) -> CoefFunction:
    """The local bump coefficient amp/rate * V((x - z0)/h).

    Its amplitude cap keeps the member inside the Holder class with
    constant holder_bound for large n.
    """
    curvature = shape_curvature_max(spec.shape)
    amp_max = spec.holder_bound / curvature
    if abs(spec.amp) > amp_max:
        raise ValueError(
            f"bump amplitude {spec.amp:.6g} exceeds the admissible {amp_max:.6g} "
            f"(= holder_bound / max curvature {curvature:.6g})"
        )
    sched = make_schedule(spec.n, spec.beta, spec.z0)
    scale = spec.amp / sched.rate
    h, z0, shape = sched.h, spec.z0, spec.shape

    def eval_(x):
        return scale * np.asarray(shape.v((np.asarray(x, dtype=np.float64) - z0) / h),
                                  dtype=np.float64)

    def deriv(x):
        return (scale / h) * np.asarray(shape.dv((np.asarray(x, dtype=np.float64) - z0) / h),
                                        dtype=np.float64)

    z = np.linspace(-1.0, 1.0, GRID_POINTS)
    sup_v = float(np.max(np.abs(np.asarray(shape.v(z), dtype=np.float64))))
    return CoefFunction(
        coef_id=f"bump_{spec.shape.shape_id}",
        eval=eval_,
        deriv=deriv,
        sup_norm_bound=abs(scale) * sup_v,
        fd_exclude=(z0 - h, z0 + h),
    )


def mollified_indicator(nu: float, quad_nodes: int = QUAD_NODES) -> tuple[Callable, float]:
    """Smoothed two-level indicator on [-1, 1] and its squared integral.

    Builds the mollification at scale nu of the step profile that is 1
    on [-(1-2 nu), 1-2 nu] and 2 on the flanking bands up to |u| = 1-nu,
    using the canonical smooth bump g(z) proportional to
    exp(-1/(1-z^2)) as mollifier. The squared integral tends to 2 from
    above as nu -> 0. Returns (V, squared integral by quadrature).
    """
    if not 0.0 < nu < 0.25:
        raise ValueError("nu must lie in (0, 0.25)")
    if quad_nodes < 3 or quad_nodes % 2 == 0:
        raise ValueError("quad_nodes must be an odd integer >= 3")

    # Cumulative distribution of the mollifier on a dense grid; linear
    # interpolation keeps evaluation vectorized and deterministic.
    t = np.linspace(-1.0, 1.0, 20_001)
    with np.errstate(divide="ignore", over="ignore"):
        g = np.where(np.abs(t) < 1.0, np.exp(-1.0 / np.maximum(1.0 - t * t, 1e-300)), 0.0)
    steps = np.diff(t)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * steps)])
    cdf /= cdf[-1]

    def mollifier_cdf(z):
        return np.interp(z, t, cdf, left=0.0, right=1.0)

    # The step profile is piecewise constant, so the convolution reduces
    # to weighted differences of the mollifier's distribution function.
    pieces = (
        (1.0, -(1.0 - 2.0 * nu), 1.0 - 2.0 * nu),
        (2.0, 1.0 - 2.0 * nu, 1.0 - nu),
        (2.0, -(1.0 - nu), -(1.0 - 2.0 * nu)),
    )

    def smoothed(x):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros(np.shape(x))
        for weight, lo, hi in pieces:
            out += weight * (mollifier_cdf((hi - x) / nu) - mollifier_cdf((lo - x) / nu))
        return out

    grid = np.linspace(-1.0, 1.0, quad_nodes)
    sigma_sq = float(simpson(smoothed(grid) ** 2, x=grid))
    return smoothed, sigma_sq


def inv_stationary_var(coef: CoefFunction, z0: float) -> float:
    """1 - S(z0)^2: the reciprocal of the local stationary second moment.

    Scales the asymptotic variance of the estimator; positive for every
    coefficient accepted by check_stability.
    """
    s0 = float(np.asarray(coef.eval(np.float64(z0)), dtype=np.float64))
    if abs(s0) >= 1.0:
        raise ValueError(f"|S(z0)| = {abs(s0):.6g} must be < 1")
    return 1.0 - s0 * s0
