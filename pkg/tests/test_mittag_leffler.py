import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import erfcx

from oracles import ml_series
from stfbe import FractionalOrders, MlParams, ml, ml_heat_symbol, mittag_leffler
from stfbe.exceptions import DomainError, NumericalFailure


def test_exponential_case():
    assert ml(MlParams(1.0, 1.0), -2.0) == pytest.approx(math.exp(-2.0), rel=1e-14)


def test_cosine_case():
    assert ml((2.0, 1.0), -1.0) == pytest.approx(math.cos(1.0), rel=1e-12)


def test_half_order_erfc_identity():
    assert ml((0.5, 1.0), -1.0) == pytest.approx(math.e * math.erfc(1.0), rel=1e-12)


@pytest.mark.parametrize("x", [0.1, 1.0, 3.0, 7.0, 20.0, 80.0, 500.0, 5000.0])
def test_half_order_erfcx_all_routes(x):
    # E_{1/2}(-x) = exp(x^2) erfc(x) covers series, contour and asymptotic routes
    assert mittag_leffler(-x, 0.5) == pytest.approx(erfcx(x), rel=1e-10)


def test_first_order_second_parameter():
    z = np.linspace(-30, 3, 50)
    z = z[z != 0]
    assert np.allclose(mittag_leffler(z, 1.0, 2.0), np.expm1(z) / z, rtol=1e-10, atol=0)


@pytest.mark.parametrize("a,b,z", [
    (0.6, 1.0, -10.0), (0.3, 1.0, -4.0), (0.9, 0.9, -25.0), (0.7, 1.3, -40.0),
    (0.45, 0.55, -7.0), (1.5, 1.0, -20.0), (1.8, 0.7, -6.0), (0.8, 1.8, 3.0),
])
def test_against_extended_precision_series(a, b, z):
    assert mittag_leffler(z, a, b) == pytest.approx(ml_series(z, a, b), rel=1e-10, abs=1e-14)


def test_heat_symbol_cross_checked_with_long_series():
    # alpha = 0.6, t = 1, xi^2 = 10
    o = FractionalOrders(0.6, 0.5)
    assert ml_heat_symbol(o, 1.0, 10.0) == pytest.approx(ml_series(-10.0, 0.6), rel=1e-10)


def test_heat_symbol_edge_values():
    o = FractionalOrders(1.0, 1.0)
    assert ml_heat_symbol(o, 0.5, 4.0) == pytest.approx(math.exp(-2.0), rel=1e-14)
    assert np.all(ml_heat_symbol(FractionalOrders(0.4, 0.2), 0.0, np.array([0.0, 1.0, 1e6])) == 1.0)


def test_cosine_identity_up_to_large_arguments():
    x = np.linspace(0.0, 40.0, 400)
    assert np.max(np.abs(mittag_leffler(-x ** 2, 2.0) - np.cos(x))) < 1e-9


@pytest.mark.parametrize("a", [0.8, 0.9, 1.0])
def test_series_contour_overlap(a):
    z = np.linspace(-8.0, -3.0, 41)
    s = mittag_leffler(z, a, 1.0, method="series")
    c = mittag_leffler(z, a, 1.0, method="contour")
    assert np.max(np.abs(s - c)) <= 1e-8


@given(a=st.floats(0.05, 1.0), b_extra=st.floats(0.0, 1.5), x=st.floats(0.0, 200.0))
def test_complete_monotonicity_region(a, b_extra, x):
    b = a + b_extra
    v0 = mittag_leffler(-x, a, b)
    v1 = mittag_leffler(-(x * 1.05 + 0.01), a, b)
    assert v0 >= -1e-15
    assert v1 <= v0 * (1 + 1e-9) + 1e-15


@given(a=st.floats(0.1, 2.0), b=st.floats(0.1, 3.0), z=st.floats(-60.0, 3.0))
def test_recurrence(a, b, z):
    lhs = mittag_leffler(z, a, b)
    rhs = z * mittag_leffler(z, a, a + b) + 1.0 / math.gamma(b)
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


def test_vectorised_shape_and_scalar():
    z = np.linspace(-5, 1, 12).reshape(3, 4)
    out = mittag_leffler(z, 0.7, 1.1)
    assert out.shape == (3, 4)
    assert isinstance(mittag_leffler(-1.0, 0.7), float)


@pytest.mark.parametrize("a,b", [(0.0, 1.0), (2.5, 1.0), (0.5, 0.0), (0.5, -1.0)])
def test_parameter_domain(a, b):
    with pytest.raises(DomainError):
        MlParams(a, b)


def test_non_finite_argument_rejected():
    with pytest.raises(DomainError):
        mittag_leffler(np.nan, 0.5)


def test_overflow_is_reported():
    with pytest.raises(NumericalFailure) as info:
        mittag_leffler(1e4, 0.3)
    assert "a" in info.value.diagnostics


def test_contour_route_rejects_positive_arguments():
    with pytest.raises(DomainError):
        mittag_leffler(1.0, 0.5, method="contour")
