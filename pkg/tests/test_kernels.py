import math

import numpy as np
import pytest
from scipy.integrate import quad

from oracles import mainardi_density, ml_series
from stfbe import FractionalOrders, TimeSeries, ml_heat_symbol, rl_integral
from stfbe.exceptions import DomainError
from stfbe.kernels import (
    KernelQuery,
    check_decay,
    check_scaling,
    kernel_mass,
    p_profile,
    p_realspace,
    q_profile,
    q_realspace,
    q_symbol,
)


def heat(t, r, d):
    return np.exp(-r ** 2 / (4 * t)) / (4 * np.pi * t) ** (d / 2)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
@pytest.mark.parametrize("t", [0.2, 1.0, 3.0])
def test_p_1d_matches_wright_density(alpha, t):
    radii = np.array([0.0, 0.3, 1.0, 2.5])
    got = p_profile(FractionalOrders(alpha, 0.1), 1, t, radii)
    ref = np.array([mainardi_density(alpha, t, r) for r in radii])
    assert np.allclose(got, ref, rtol=1e-7, atol=1e-12)


@pytest.mark.parametrize("d", [1, 2])
def test_p_heat_limit(d):
    radii = np.array([0.2, 0.7, 1.5, 3.0])
    got = p_profile(FractionalOrders(1.0, 0.5), d, 0.5, radii)
    assert np.allclose(got, heat(0.5, radii, d), rtol=1e-9, atol=1e-14)


def test_q_equals_p_when_orders_match():
    o = FractionalOrders(0.7, 0.7)
    radii = np.array([0.1, 0.5, 2.0])
    assert np.allclose(q_profile(o, 1, 0.8, radii), p_profile(o, 1, 0.8, radii), rtol=1e-12)


def test_q_heat_time_integral():
    # alpha = 1, beta = 0: q is the time integral of the heat kernel
    o = FractionalOrders(1.0, 0.0)
    for r in (0.3, 1.0):
        ref = quad(lambda s: heat(s, r, 1), 0, 0.7, epsabs=1e-14)[0]
        assert q_profile(o, 1, 0.7, np.array([r]))[0] == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("alpha,beta", [(0.6, 0.75), (0.9, 0.2), (0.5, 0.0)])
def test_q_symbol_against_series(alpha, beta):
    o = FractionalOrders(alpha, beta)
    t = 0.7
    xi = np.array([0.0, 0.5, 3.0, 12.0])
    got = q_symbol(o, t, xi)
    ref = [t ** (alpha - beta) * ml_series(-t ** alpha * x, alpha, alpha - beta + 1) for x in xi]
    assert np.allclose(got, ref, rtol=1e-11, atol=1e-15)


def test_q_symbol_domain():
    with pytest.raises(DomainError):
        q_symbol(FractionalOrders(0.8, 0.3), 0.0, 1.0)


@pytest.mark.parametrize("alpha", [0.3, 0.6, 1.0])
def test_mass_is_one(alpha):
    assert kernel_mass(FractionalOrders(alpha, 0.1), 1.0) == pytest.approx(1.0, abs=1e-6)


def test_positivity_2d():
    o = FractionalOrders(0.6, 0.3)
    vals = p_profile(o, 2, 0.5, np.linspace(0.05, 4.0, 30))
    assert np.all(vals > 0)
    assert np.all(np.diff(vals) < 0)


def test_2d_origin_is_singular():
    with pytest.raises(DomainError):
        p_profile(FractionalOrders(0.6, 0.3), 2, 1.0, np.array([0.0]))


@pytest.mark.parametrize("d", [1, 2])
def test_scaling_identity(d):
    o = FractionalOrders(0.55, 0.4)
    x = (0.7,) if d == 1 else (0.5, -0.4)
    assert check_scaling(o, d, 0.3, 2.0, x) <= 1e-8


def test_realspace_queries():
    o = FractionalOrders(0.8, 0.6)
    q = KernelQuery(o, 2, 1.0, (0.3, 0.4))
    assert q.radius == pytest.approx(0.5)
    assert p_realspace(q) == pytest.approx(p_profile(o, 2, 1.0, np.array([0.5]))[0])
    assert q_realspace(q) == pytest.approx(q_profile(o, 2, 1.0, np.array([0.5]))[0])


def test_query_validation():
    o = FractionalOrders(0.8, 0.6)
    with pytest.raises(DomainError):
        KernelQuery(o, 3, 1.0, (0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        KernelQuery(o, 2, 1.0, (0.1,))


def test_decay_heat_constant():
    fit = check_decay(FractionalOrders(1.0, 0.5), 1, 1.0, np.linspace(4.0, 10.0, 25))
    assert fit.finite
    assert fit.c == pytest.approx(0.25, rel=0.1)
    assert fit.residual < 0.05
    assert fit.max_ratio <= 1.0 + 1e-12


def test_decay_fractional():
    fit = check_decay(FractionalOrders(0.5, 0.3), 1, 1.0, np.linspace(1.0, 6.0, 25))
    assert fit.finite and fit.c > 0
    assert fit.residual < 0.05


def test_decay_errors():
    o = FractionalOrders(0.5, 0.3)
    with pytest.raises(ValueError):
        check_decay(o, 1, 1.0, [])
    with pytest.raises(DomainError):
        check_decay(o, 1, 1.0, [0.5, 2.0])
    with pytest.raises(ValueError):
        check_decay(o, 1, 1.0, [2.0])


def test_q_symbol_reduces_to_heat_symbol():
    o = FractionalOrders(0.6, 0.6)
    xi = np.array([0.0, 1.0, 7.0])
    assert np.allclose(q_symbol(o, 0.9, xi), ml_heat_symbol(o, 0.9, xi), rtol=1e-14)
    classical = q_symbol(FractionalOrders(1.0, 1.0), 0.7, xi)
    assert np.allclose(classical, np.exp(-0.7 * xi), rtol=1e-13)


def test_q_symbol_matches_discrete_fractional_integral():
    o = FractionalOrders(0.7, 0.4)
    p_hat = TimeSeries.from_function(lambda s: ml_heat_symbol(o, s, 2.0), 1.0, 2 ** 12)
    assert abs(rl_integral(p_hat, 0.3).values[-1] - q_symbol(o, 1.0, 2.0)) <= 1e-4


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9])
@pytest.mark.parametrize("d", [1, 2])
def test_positivity(alpha, d):
    vals = p_profile(FractionalOrders(alpha, 0.1), d, 1.0, np.linspace(0.05, 8.0, 60))
    assert np.all(vals >= -1e-8)


def test_scaling_special_cases():
    assert check_scaling(FractionalOrders(0.5, 0.5), 1, 1.0, 1.0, (0.7,)) == 0.0
    assert check_scaling(FractionalOrders(1.0, 1.0), 1, 0.4, 2.5, (0.9,)) <= 1e-10
    for t1 in (0.2, 3.0):
        assert check_scaling(FractionalOrders(0.5, 0.5), 1, t1, 1.0, (0.7,)) <= 1e-5
