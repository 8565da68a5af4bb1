"""Two-parameter Mittag-Leffler function on the real line.

E_{a,b}(z) = sum_k z^k / Gamma(a k + b) is evaluated by one of three routes:

* the power series, summed in log-magnitude form, whenever it is free of
  cancellation (z >= 0) or the cancellation is mild (|z|**(1/a) <= 6);
* the Poincare asymptotic expansion for z <= -1000 and a <= 1;
* inversion of the Laplace transform s**(a-b) / (s**a - z) along a parabolic
  Bromwich contour (trapezoidal rule), plus the residues of any poles of the
  transform that lie outside the contour when 1 < a <= 2.

All routines are vectorised over ``z``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, rgamma

from ._validation import check_scalar
from .exceptions import DomainError, NumericalFailure

__all__ = ["MlParams", "ml", "mittag_leffler", "ml_heat_symbol"]

SERIES_ROUGHNESS = 6.0   # series used while |z|**(1/a) stays below this
ASYMPTOTIC_FROM = 1.0e3  # |z| above which the asymptotic expansion is used (a <= 1)
OVERFLOW_LIMIT = 700.0   # log of the largest representable result we attempt

# parabolic contour s(u) = mu (1 + i u)^2, trapezoidal nodes u_j = j h
_CONTOUR_NODES = 40
_CONTOUR_STEP = 0.1
_CONTOUR_MU = 3.0


@dataclass(frozen=True)
class MlParams:
    """Parameters (a, b) of E_{a,b}; requires 0 < a <= 2 and b > 0."""

    a: float
    b: float = 1.0

    def __post_init__(self):
        check_scalar(self.a, "a", lower=0.0, upper=2.0, lower_inclusive=False)
        check_scalar(self.b, "b", lower=0.0, lower_inclusive=False)


def ml(params, z):
    """Evaluate E_{a,b}(z) for real ``z`` (scalar or array).

    Parameters
    ----------
    params : MlParams or tuple of (a, b)
    z : float or array_like

    Returns
    -------
    float or ndarray
        Same shape as ``z``.
    """
    if not isinstance(params, MlParams):
        params = MlParams(*params)
    return mittag_leffler(z, params.a, params.b)


def mittag_leffler(z, a, b=1.0, method="auto"):
    """Vectorised E_{a,b}(z).

    ``method`` forces one route (``"series"``, ``"contour"`` or
    ``"asymptotic"``); ``"auto"`` picks per element.  Forcing a route outside
    its validity region gives inaccurate results, which is only useful for
    cross-checks.
    """
    MlParams(a, b)
    a = float(a)
    b = float(b)
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)
    if not np.all(np.isfinite(z_arr)):
        raise DomainError("z must be finite")

    out = np.empty_like(z_arr)
    if method == "auto":
        if a == 1.0 and b == 1.0:
            out = np.exp(z_arr)
            return out[0] if scalar else out
        absz = np.abs(z_arr)
        use_series = (z_arr >= 0) | (absz ** (1.0 / a) <= SERIES_ROUGHNESS)
        use_asym = ~use_series & (a <= 1.0) & (absz >= ASYMPTOTIC_FROM)
        use_contour = ~use_series & ~use_asym
    else:
        full = np.ones(z_arr.shape, dtype=bool)
        none = ~full
        use_series = full if method == "series" else none
        use_asym = full if method == "asymptotic" else none
        use_contour = full if method == "contour" else none
        if method not in ("series", "asymptotic", "contour"):
            raise ValueError(f"unknown method {method!r}")
    if np.any(use_contour & (z_arr >= 0)):
        raise DomainError("contour route is implemented for z < 0 only")

    if np.any(use_series):
        out[use_series] = _series(z_arr[use_series], a, b)
    if np.any(use_asym):
        out[use_asym] = _asymptotic(z_arr[use_asym], a, b)
    if np.any(use_contour):
        out[use_contour] = _contour(z_arr[use_contour], a, b)
    return out[0] if scalar else out


def ml_heat_symbol(orders, t, xi_sq):
    """Fourier symbol E_alpha(-t**alpha * |xi|^2) of the subdiffusion kernel.

    ``orders`` is anything with an ``alpha`` attribute (e.g. FractionalOrders).
    Broadcasts over ``t`` and ``xi_sq``; returns 1 wherever ``t == 0``.
    """
    alpha = float(orders.alpha)
    t = np.asarray(t, dtype=float)
    xi_sq = np.asarray(xi_sq, dtype=float)
    if np.any(t < 0) or np.any(xi_sq < 0):
        raise DomainError("t and xi_sq must be nonnegative")
    z = -(t ** alpha) * xi_sq
    return mittag_leffler(z, alpha, 1.0)


def _series(z, a, b):
    out = np.zeros_like(z)
    zero = z == 0
    out[zero] = rgamma(b)
    nz = ~zero
    if not np.any(nz):
        return out
    zz = z[nz]
    logabs = np.log(np.abs(zz))
    neg = zz < 0
    total = np.zeros_like(zz)
    done = np.zeros(zz.shape, dtype=bool)
    prev_log = np.full(zz.shape, -np.inf)
    for k in range(20000):
        lt = k * logabs - gammaln(a * k + b)
        if np.any(lt > OVERFLOW_LIMIT):
            raise NumericalFailure(
                "Mittag-Leffler series overflows",
                {"a": a, "b": b, "z_max": float(np.max(np.abs(zz)))},
            )
        term = np.exp(lt)
        if k % 2 == 1:
            term = np.where(neg, -term, term)
        total = np.where(done, total, total + term)
        # stop once terms are decreasing and negligible
        small = (lt < prev_log) & (np.exp(lt) <= 1e-17 * np.maximum(np.abs(total), 1e-300))
        done |= small
        prev_log = lt
        if np.all(done):
            break
    else:
        raise NumericalFailure("Mittag-Leffler series did not converge", {"a": a, "b": b})
    out[nz] = total
    return out


def _asymptotic(z, a, b):
    # E_{a,b}(z) ~ -sum_{k>=1} z^{-k} / Gamma(b - a k) for z -> -inf, a < 2
    total = np.zeros_like(z)
    zinv = 1.0 / z
    power = np.ones_like(z)
    last = np.full(z.shape, np.inf)
    for k in range(1, 60):
        power = power * zinv
        term = -power * rgamma(b - a * k)
        mag = np.abs(term)
        if np.all((mag <= 1e-17 * np.abs(total)) | (mag == 0)) and k > 2:
            break
        if np.any((mag > last) & (mag > 1e-17 * np.abs(total))):
            # divergent tail reached before the tolerance
            break
        last = np.where(mag > 0, mag, last)
        total = total + term
    return total


def _pole_points(z, a):
    """Upper pole of s**(a-b)/(s**a - z) on the principal sheet (z < 0, a > 1)."""
    r = np.abs(z) ** (1.0 / a)
    return r * np.exp(1j * np.pi / a)


def _contour(z, a, b, step=_CONTOUR_STEP, mu=_CONTOUR_MU):
    z = np.asarray(z, dtype=float)
    mus = np.full(z.shape, mu)
    poles = None
    if a > 1.0:
        # Keep the poles well away from the parabola: inside it when that needs
        # only a moderate mu (cancellation grows like exp(mu)), otherwise
        # outside it, in which case their residues are added explicitly.
        poles = _pole_points(z, a)
        reach = np.abs(poles) * np.cos(np.pi / (2.0 * a)) ** 2
        inside_mu = reach / 0.36
        mus = np.where(inside_mu <= 8.0, np.maximum(mu, inside_mu),
                       np.minimum(mu, reach / 1.96))
    u_max = np.sqrt(1.0 + 40.0 / mus.min())
    n_nodes = int(np.ceil(u_max / step))
    out = _contour_fixed(z, a, b, n_nodes, step, mus if a > 1.0 else mu)
    if poles is not None:
        outside = np.sqrt(poles / mus).real > 1.0
        res = (1.0 / a) * poles ** (1.0 - b) * np.exp(poles)
        out = out + np.where(outside, 2.0 * res.real, 0.0)
    if not np.all(np.isfinite(out)):
        bad = z[~np.isfinite(out)]
        raise NumericalFailure(
            "Mittag-Leffler contour quadrature produced non-finite values",
            {"a": a, "b": b, "z": bad[:5].tolist(), "nodes": n_nodes, "mu": float(mus.min())},
        )
    return out


def _contour_fixed(z, a, b, n_nodes, step, mu):
    """Trapezoidal rule on s(u) = mu (1 + i u)^2, u >= 0, using conjugate symmetry."""
    z = np.asarray(z, dtype=float)
    u = step * np.arange(n_nodes + 1)
    weights = np.full(n_nodes + 1, 2.0 * step / (2j * np.pi))
    weights[0] /= 2.0
    if np.ndim(mu) == 0:
        # nodes shared by every z: precompute everything but the denominator
        s = mu * (1.0 + 1j * u) ** 2
        num = np.exp(s) * s ** (a - b) * (2j * mu * (1.0 + 1j * u)) * weights
        sa = s ** a
        out = np.empty_like(z)
        for lo in range(0, z.size, 65536):
            zz = z[lo:lo + 65536, None]
            out[lo:lo + 65536] = (num / (sa - zz)).sum(axis=1).real
        return out
    mu = np.asarray(mu, dtype=float)[:, None]
    s = mu * (1.0 + 1j * u) ** 2
    vals = np.exp(s) * s ** (a - b) * (2j * mu * (1.0 + 1j * u)) / (s ** a - z[:, None])
    return (vals * weights).sum(axis=1).real
