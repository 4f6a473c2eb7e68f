"""Time-varying first-order autoregression on the unit design grid.

The observation model is

    y_k = S(x_k) * y_{k-1} + xi_k,    x_k = k/n,    k = 1, ..., n,

driven by i.i.d. unit-variance noise. This module holds the model
fixtures (coefficient functions, noise densities), the trajectory
simulator, and trajectory serialization.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .rng import stream
from .util import fmt


@dataclass(frozen=True)
class CoefFunction:
    """Autoregression coefficient x -> S(x) on [0, 1].

    Parameters
    ----------
    coef_id : str
        Stable label used in configs and seed derivation.
    eval : callable
        Vectorized map [0, 1] -> R.
    deriv : callable
        Vectorized exact first derivative, wherever S is differentiable.
    sup_norm_bound : float
        Declared analytic bound on sup |S| over [0, 1].
    fd_exclude : tuple of float
        Points near which finite-difference validation of `deriv` is
        skipped: the derivative exists there but is not smooth enough
        for the difference quotient to converge at the test tolerance.
    """

    coef_id: str
    eval: Callable
    deriv: Callable
    sup_norm_bound: float
    fd_exclude: tuple = ()


@dataclass(frozen=True)
class NoiseDensity:
    """Unit-variance noise family member with declared moment certificates."""

    noise_id: str
    sample: Callable  # (generator, size) -> ndarray of draws
    mean: float
    variance: float
    fourth_moment: float
    sigma_star: float  # panel-wide fourth-moment cap this member lives under


@dataclass(frozen=True)
class Trajectory:
    """One simulated path. y has length n+1 with y[0] = y0; residuals
    holds the n innovations so the recursion can be replayed exactly."""

    n: int
    y0: float
    y: np.ndarray
    residuals: Optional[np.ndarray]
    coef_id: str = ""
    noise_id: str = ""
    seed: Optional[int] = None

    @property
    def x(self) -> np.ndarray:
        """Design points x_k = k/n for k = 0..n."""
        return np.arange(self.n + 1) / self.n


def _check_noise(noise: NoiseDensity) -> None:
    if noise.mean != 0.0:
        raise ValueError(f"noise {noise.noise_id!r} declares mean {noise.mean}, must be 0")
    if noise.variance != 1.0:
        raise ValueError(f"noise {noise.noise_id!r} declares variance {noise.variance}, must be 1")
    if noise.fourth_moment < noise.variance**2:
        raise ValueError(
            f"noise {noise.noise_id!r} declares fourth moment {noise.fourth_moment} "
            f"below variance^2 = {noise.variance ** 2}"
        )
    if noise.fourth_moment > noise.sigma_star:
        raise ValueError(
            f"noise {noise.noise_id!r} declares fourth moment {noise.fourth_moment} "
            f"above its cap {noise.sigma_star}"
        )


def coef_values(coef: CoefFunction, n: int, upto: int | None = None) -> np.ndarray:
    """S evaluated on the design grid k/n for k = 1..upto (default n).

    Single source of the grid evaluation so the scalar simulator and the
    batched engine see bit-identical coefficient values.
    """
    upto = n if upto is None else upto
    x = np.arange(1, upto + 1) / n
    return np.asarray(coef.eval(x), dtype=np.float64)


def simulate(coef: CoefFunction, noise: NoiseDensity, n: int, y0: float, seed: int) -> Trajectory:
    """Draw one trajectory of length n.

    Identical inputs produce bit-identical output: the noise stream is a
    counter-based generator keyed by `seed`, and the recursion applies
    one multiply and one add per step in increasing k.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    _check_noise(noise)
    s = coef_values(coef, n)
    xi = np.asarray(noise.sample(stream(seed), n), dtype=np.float64)
    if xi.shape != (n,):
        raise ValueError(f"noise sampler returned shape {xi.shape}, expected ({n},)")
    y = _recurse(s.tolist(), xi.tolist(), float(y0))
    return Trajectory(n=n, y0=float(y0), y=y, residuals=xi,
                      coef_id=coef.coef_id, noise_id=noise.noise_id, seed=int(seed))


def replay(coef: CoefFunction, residuals, y0: float) -> Trajectory:
    """Build the trajectory generated by injected residuals."""
    xi = np.asarray(residuals, dtype=np.float64)
    n = xi.size
    if n < 1:
        raise ValueError("residuals must be non-empty")
    s = coef_values(coef, n)
    y = _recurse(s.tolist(), xi.tolist(), float(y0))
    return Trajectory(n=n, y0=float(y0), y=y, residuals=xi, coef_id=coef.coef_id)


def _recurse(s: list, xi: list, y0: float) -> np.ndarray:
    y = [0.0] * (len(xi) + 1)
    y[0] = y0
    cur = y0
    for k in range(1, len(xi) + 1):
        cur = s[k - 1] * cur + xi[k - 1]
        y[k] = cur
    return np.asarray(y, dtype=np.float64)


def replay_error(traj: Trajectory, coef: CoefFunction) -> float:
    """Max relative recursion error when y is recomputed from residuals."""
    if traj.residuals is None:
        raise ValueError("trajectory carries no residuals")
    rebuilt = _recurse(coef_values(coef, traj.n).tolist(), traj.residuals.tolist(), traj.y0)
    scale = np.maximum(np.abs(traj.y), 1.0)
    return float(np.max(np.abs(rebuilt - traj.y) / scale))


def fourth_moment_bound(eps: float, sigma_star: float, y0: float = 0.0) -> float:
    """Uniform bound on E y_k^4 when sup |S| <= 1 - eps and the noise
    fourth moment is at most sigma_star."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if sigma_star < 3.0:
        raise ValueError("sigma_star must be at least 3")
    return 8.0 * y0**4 + 8.0 * sigma_star / eps**4


_UNIFORM_HALF_WIDTH = np.sqrt(3.0)
_LAPLACE_SCALE = 1.0 / np.sqrt(2.0)
# Two-component scale mixture: variances 1/2 and 3/2 picked with equal
# probability; overall variance 1, fourth moment 3*(1/4 + 9/4)/2 = 15/4.
_MIX_SD = (np.sqrt(0.5), np.sqrt(1.5))


def _sample_gaussian(rng, size):
    return rng.standard_normal(size)


def _sample_uniform(rng, size):
    return rng.uniform(-_UNIFORM_HALF_WIDTH, _UNIFORM_HALF_WIDTH, size)


def _sample_laplace(rng, size):
    return rng.laplace(0.0, _LAPLACE_SCALE, size)


def _sample_mixture(rng, size):
    narrow = rng.random(size) < 0.5
    z = rng.standard_normal(size)
    return z * np.where(narrow, _MIX_SD[0], _MIX_SD[1])


def noise_panel(sigma_star: float = 9.0) -> list[NoiseDensity]:
    """The four unit-variance noise densities used for risk suprema.

    Standard Gaussian, centered uniform, unit-variance Laplace, and a
    symmetric two-component Gaussian scale mixture. Every member has
    mean 0, variance 1, and fourth moment at most sigma_star.
    """
    if sigma_star < 3.0:
        raise ValueError("sigma_star must be at least 3")
    if sigma_star < 6.0:
        raise ValueError(
            f"sigma_star = {sigma_star} excludes the laplace member "
            "(standardized fourth moment 6)"
        )
    return [
        NoiseDensity("gaussian", _sample_gaussian, 0.0, 1.0, 3.0, sigma_star),
        NoiseDensity("uniform", _sample_uniform, 0.0, 1.0, 9.0 / 5.0, sigma_star),
        NoiseDensity("laplace", _sample_laplace, 0.0, 1.0, 6.0, sigma_star),
        NoiseDensity("scale_mixture", _sample_mixture, 0.0, 1.0, 3.75, sigma_star),
    ]


def noise_by_id(noise_id: str, sigma_star: float = 9.0) -> NoiseDensity:
    for member in noise_panel(sigma_star):
        if member.noise_id == noise_id:
            return member
    known = ", ".join(m.noise_id for m in noise_panel(sigma_star))
    raise ValueError(f"unknown noise_id {noise_id!r}; known: {known}")


# Coefficient fixtures. All are localized at the estimation point, so the
# registry is a factory over (coef_id, z0).

COEF_IDS = ("zero", "const_half", "sine", "rough_15")


def make_coef(coef_id: str, z0: float) -> CoefFunction:
    """Named coefficient fixtures, localized at the estimation point z0."""
    if coef_id == "zero":
        return CoefFunction(
            "zero",
            lambda x: np.zeros(np.shape(x)),
            lambda x: np.zeros(np.shape(x)),
            0.0,
        )
    if coef_id == "const_half":
        return CoefFunction(
            "const_half",
            lambda x: np.full(np.shape(x), 0.5),
            lambda x: np.zeros(np.shape(x)),
            0.5,
        )
    if coef_id == "sine":
        two_pi = 2.0 * np.pi
        return CoefFunction(
            "sine",
            lambda x: 0.4 + 0.3 * np.sin(two_pi * (np.asarray(x, dtype=np.float64) - z0)),
            lambda x: 0.3 * two_pi * np.cos(two_pi * (np.asarray(x, dtype=np.float64) - z0)),
            0.7,
        )
    if coef_id == "rough_15":
        # Derivative 1.8*|x-z0|^0.5 is exact but only Holder-1/2 smooth at
        # z0, hence the finite-difference exclusion there.
        c = 1.2
        far = max(z0, 1.0 - z0)
        return CoefFunction(
            "rough_15",
            lambda x: 0.3 + c * np.sign(np.asarray(x, dtype=np.float64) - z0)
            * np.abs(np.asarray(x, dtype=np.float64) - z0) ** 1.5,
            lambda x: 1.5 * c * np.abs(np.asarray(x, dtype=np.float64) - z0) ** 0.5,
            0.3 + c * far**1.5,
            fd_exclude=(z0,),
        )
    raise ValueError(f"unknown coef_id {coef_id!r}; known: {', '.join(COEF_IDS)}")


def verify_coef(coef: CoefFunction, grid_points: int = 10_000,
                step: float = 1e-5, exclude_radius: float = 5e-3) -> tuple[float, float]:
    """Validate a CoefFunction's certificates on a uniform grid.

    Returns (max relative derivative error against central differences,
    grid supremum of |S|). Grid points within exclude_radius of an
    fd_exclude location are skipped for the derivative check only.
    """
    x = np.linspace(0.0, 1.0, grid_points)
    sup = float(np.max(np.abs(np.asarray(coef.eval(x), dtype=np.float64))))
    inner = x[(x - step >= 0.0) & (x + step <= 1.0)]
    for p in coef.fd_exclude:
        inner = inner[np.abs(inner - p) > exclude_radius]
    fd = (np.asarray(coef.eval(inner + step)) - np.asarray(coef.eval(inner - step))) / (2.0 * step)
    exact = np.asarray(coef.deriv(inner), dtype=np.float64)
    rel = np.abs(fd - exact) / np.maximum(np.abs(exact), 1.0)
    return float(np.max(rel)), sup


# Trajectory serialization: header `k,x,y,xi`, one row per step, k from 0
# (xi empty at k = 0), floats at 17 significant digits.

def save_trajectory(traj: Trajectory, path) -> None:
    if traj.residuals is None:
        raise ValueError("cannot serialize a trajectory without residuals")
    lines = ["k,x,y,xi"]
    x = traj.x
    lines.append(f"0,{fmt(x[0])},{fmt(traj.y[0])},")
    for k in range(1, traj.n + 1):
        lines.append(f"{k},{fmt(x[k])},{fmt(traj.y[k])},{fmt(traj.residuals[k - 1])}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def load_trajectory(path) -> Trajectory:
    with open(path, "r", newline="") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "k,x,y,xi":
        raise ValueError(f"{path}: expected header 'k,x,y,xi'")
    body = lines[1:]
    n = len(body) - 1
    if n < 1:
        raise ValueError(f"{path}: trajectory must contain at least one step")
    y = np.empty(n + 1)
    xi = np.empty(n)
    for i, line in enumerate(body):
        cells = line.split(",")
        if len(cells) != 4 or int(cells[0]) != i:
            raise ValueError(f"{path}: malformed row {i}: {line!r}")
        y[i] = float(cells[2])
        if i > 0:
            xi[i - 1] = float(cells[3])
    return Trajectory(n=n, y0=float(y[0]), y=y, residuals=xi)
