"""Function classes: stability, smoothness certificates, bumps, mollifier."""

import numpy as np
import pytest

from tvarkern.classes import (
    BumpSpec,
    BumpShape,
    HolderSpec,
    WeakHolderSpec,
    bump_function,
    check_stability,
    check_weak_membership,
    holder_constant,
    inv_stationary_var,
    mollified_indicator,
    quartic_shape,
    shape_curvature_max,
    shape_integral,
    window_deviation_integral,
)
from tvarkern.estimator import make_schedule
from tvarkern.model import CoefFunction, make_coef


def const_coef(c):
    return CoefFunction(coef_id=f"const_{c}",
                        eval=lambda x: np.full_like(np.asarray(x, dtype=np.float64), c),
                        deriv=lambda x: np.zeros_like(np.asarray(x, dtype=np.float64)),
                        sup_norm_bound=abs(c))


def poly_coef(coef_id, fn, dfn, bound):
    return CoefFunction(coef_id=coef_id,
                        eval=lambda x: fn(np.asarray(x, dtype=np.float64)),
                        deriv=lambda x: dfn(np.asarray(x, dtype=np.float64)),
                        sup_norm_bound=bound)


def test_check_stability():
    sine = make_coef("sine", z0=0.5)
    assert check_stability(sine, 0.25)          # sup = 0.7 <= 0.75
    assert check_stability(sine, 0.3)           # boundary: 0.7 <= 0.7
    assert not check_stability(sine, 0.31)
    assert check_stability(make_coef("const_half", z0=0.5), 0.5)
    with pytest.raises(ValueError):
        check_stability(sine, 0.0)
    with pytest.raises(ValueError):
        check_stability(sine, 1.0)


def test_holder_constant_oracles():
    # sine: S'(x) = 0.3*2pi*cos(2pi(x-z0)); alpha = 0 modulus = 2*0.6pi
    sine = make_coef("sine", z0=0.5)
    assert holder_constant(sine, 0.5, 0.0) == pytest.approx(1.2 * np.pi, rel=1e-9)
    # rough_15: |S'(x) - S'(z0)| = 1.8|x-z0|^{1/2} exactly, so the
    # alpha = 1/2 modulus is the constant 1.8 at every grid point
    rough = make_coef("rough_15", z0=0.5)
    assert holder_constant(rough, 0.5, 0.5) == pytest.approx(1.8, rel=1e-12)
    with pytest.raises(ValueError):
        holder_constant(sine, 0.5, 1.0)
    with pytest.raises(ValueError):
        holder_constant(sine, 0.0, 0.0)


def test_window_deviation_integral_oracles():
    # quadratic S: integral of (u h)^2 du over [-1, 1] = 2 h^2 / 3
    quad = poly_coef("quad", lambda x: (x - 0.5) ** 2, lambda x: 2.0 * (x - 0.5), 0.25)
    h = 0.125
    assert window_deviation_integral(quad, 0.5, h) == pytest.approx(2.0 * h * h / 3.0, rel=1e-9)
    # linear S: odd in u, integral vanishes
    lin = poly_coef("lin", lambda x: 0.3 * (x - 0.5), lambda x: np.full_like(x, 0.3), 0.15)
    assert abs(window_deviation_integral(lin, 0.5, h)) < 1e-15
    # sine fixture is odd around z0 as well
    sine = make_coef("sine", z0=0.5)
    assert abs(window_deviation_integral(sine, 0.5, h)) < 1e-12
    with pytest.raises(ValueError, match="leaves"):
        window_deviation_integral(sine, 0.5, 0.6)
    with pytest.raises(ValueError):
        window_deviation_integral(sine, 0.5, 0.0)
    with pytest.raises(ValueError, match="odd"):
        window_deviation_integral(sine, 0.5, 0.125, quad_nodes=10)


def test_spec_validation():
    HolderSpec(z0=0.5, beta=1.5, holder_bound=1.0, eps=0.25)
    assert HolderSpec(z0=0.5, beta=1.5, holder_bound=1.0, eps=0.25).alpha == 0.5
    with pytest.raises(ValueError):
        HolderSpec(z0=0.5, beta=2.0, holder_bound=1.0, eps=0.25)
    with pytest.raises(ValueError):
        HolderSpec(z0=0.5, beta=1.5, holder_bound=0.0, eps=0.25)
    with pytest.raises(ValueError):
        HolderSpec(z0=1.5, beta=1.5, holder_bound=1.0, eps=0.25)
    spec = WeakHolderSpec(z0=0.5, beta=1.0, delta=0.5, eps=0.25, n=4096)
    assert spec.h == pytest.approx(4096.0 ** (-1.0 / 3.0), rel=1e-15)
    with pytest.raises(ValueError):
        WeakHolderSpec(z0=0.5, beta=1.0, delta=0.0, eps=0.25, n=4096)
    with pytest.raises(ValueError):
        WeakHolderSpec(z0=0.5, beta=1.0, delta=0.5, eps=0.25, n=0)


def test_weak_membership():
    sine = make_coef("sine", z0=0.5)
    # sup|S'| = 0.6 pi ~ 1.885; cap 1/delta = 2 admits it, 1/0.6 does not
    assert check_weak_membership(sine, WeakHolderSpec(0.5, 1.0, 0.5, 0.25, 4096))
    assert not check_weak_membership(sine, WeakHolderSpec(0.5, 1.0, 0.6, 0.25, 4096))
    # stability failure dominates
    assert not check_weak_membership(sine, WeakHolderSpec(0.5, 1.0, 0.5, 0.31, 4096))
    # quadratic deviation 2h^2/3 > delta * h for tiny delta
    quad = poly_coef("quad", lambda x: (x - 0.5) ** 2, lambda x: 2.0 * (x - 0.5), 0.25)
    assert check_weak_membership(quad, WeakHolderSpec(0.5, 1.0, 0.5, 0.25, 4096))
    assert not check_weak_membership(quad, WeakHolderSpec(0.5, 1.0, 0.01, 0.25, 4096))


def test_bump_lives_in_weak_class():
    # admissible bump at the critical amplitude stays in the weak class
    n, beta = 4096, 1.0
    spec = BumpSpec(shape=quartic_shape(), amp=0.125, n=n, beta=beta, z0=0.5)
    bump = bump_function(spec)
    assert check_weak_membership(bump, WeakHolderSpec(0.5, beta, 0.2, 0.25, n))


def test_quartic_shape_values():
    shape = quartic_shape()
    z = np.array([-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5])
    v = np.asarray(shape.v(z))
    assert v.tolist() == [0.0, 0.0, 0.5625, 1.0, 0.5625, 0.0, 0.0]
    assert float(shape.dv(np.float64(0.0))) == 0.0
    assert float(shape.ddv(np.float64(0.0))) == -4.0
    assert shape_curvature_max(shape) == 8.0
    assert shape_integral(shape) == pytest.approx(16.0 / 15.0, abs=1e-9)


def test_bump_function_geometry():
    n, beta, z0 = 100_000, 1.0, 0.5
    sched = make_schedule(n, beta, z0)
    spec = BumpSpec(shape=quartic_shape(), amp=0.1, n=n, beta=beta, z0=z0)
    bump = bump_function(spec)
    assert bump.coef_id == "bump_quartic"
    # peak value is amp / rate, support is [z0 - h, z0 + h]
    assert float(bump.eval(np.float64(z0))) == pytest.approx(0.1 / sched.rate, rel=1e-15)
    outside = np.array([z0 - 1.5 * sched.h, z0 + 1.5 * sched.h, 0.0, 1.0])
    assert np.all(np.asarray(bump.eval(outside)) == 0.0)
    # derivative certificate is consistent (away from the support edge)
    x = z0 + 0.4 * sched.h
    step = sched.h * 1e-4
    fd = (float(bump.eval(x + step)) - float(bump.eval(x - step))) / (2.0 * step)
    assert fd == pytest.approx(float(bump.deriv(x)), rel=1e-6)
    # the amplitude cap keeps the derivative modulus within holder_bound
    assert holder_constant(bump, z0, beta - 1.0) <= spec.holder_bound + 1e-12


def test_bump_amplitude_gate():
    n = 4096
    with pytest.raises(ValueError, match="exceeds the admissible 0.125"):
        bump_function(BumpSpec(shape=quartic_shape(), amp=0.2, n=n, beta=1.0, z0=0.5))
    # cap scales with holder_bound
    bump_function(BumpSpec(shape=quartic_shape(), amp=0.2, n=n, beta=1.0, z0=0.5,
                           holder_bound=2.0))
    # shapes must vanish off [-1, 1] and integrate to something positive
    flat = BumpShape("flat", lambda z: np.ones_like(np.asarray(z, dtype=np.float64)),
                     lambda z: np.zeros_like(np.asarray(z, dtype=np.float64)),
                     lambda z: np.zeros_like(np.asarray(z, dtype=np.float64)))
    with pytest.raises(ValueError, match="vanish"):
        BumpSpec(shape=flat, amp=0.1, n=n, beta=1.0, z0=0.5)
    q = quartic_shape()
    negated = BumpShape("neg", lambda z: -np.asarray(q.v(z)), q.dv, q.ddv)
    with pytest.raises(ValueError, match="positive integral"):
        BumpSpec(shape=negated, amp=0.1, n=n, beta=1.0, z0=0.5)


def test_mollified_indicator():
    prev = None
    for nu in (0.2, 0.1, 0.05, 0.01):
        smoothed, sigma_sq = mollified_indicator(nu)
        z = np.linspace(-2.0, 2.0, 2001)
        vals = np.asarray(smoothed(z), dtype=np.float64)
        # even profile, vanishing off [-1, 1], plateau value 1 at 0
        assert np.allclose(vals, vals[::-1], atol=1e-12)
        assert np.all(vals[np.abs(z) > 1.0 + 1e-12] == 0.0)
        assert float(smoothed(np.float64(0.0))) == pytest.approx(1.0, abs=1e-9)
        # squared integral approaches its small-nu limit 2 from above
        assert sigma_sq > 2.0
        if prev is not None:
            assert sigma_sq < prev
        prev = sigma_sq
    _, sigma_sq = mollified_indicator(0.01)
    assert sigma_sq == pytest.approx(2.0, abs=0.15)
    for bad in (0.0, 0.25, -0.1):
        with pytest.raises(ValueError):
            mollified_indicator(bad)


def test_inv_stationary_var():
    assert inv_stationary_var(make_coef("const_half", z0=0.5), 0.5) == 0.75
    assert inv_stationary_var(make_coef("zero", z0=0.5), 0.5) == 1.0
    with pytest.raises(ValueError, match="must be < 1"):
        inv_stationary_var(const_coef(1.0), 0.5)
