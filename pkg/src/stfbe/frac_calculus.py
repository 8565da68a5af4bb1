"""Fractional integrals and derivatives of uniformly sampled functions of time.

Grid convention: samples ``f[n] = f(n * dt)``, ``n = 0 .. N-1``.  Derivative
outputs are defined as 0 at ``n = 0``.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import gamma

from ._validation import check_finite_array, check_scalar
from .exceptions import AdmissibilityError, DomainError, NumericalFailure
from .mittag_leffler import mittag_leffler

__all__ = [
    "FractionalOrders",
    "TimeSeries",
    "Tolerances",
    "TOLERANCES",
    "rl_integral",
    "caputo_derivative",
    "rl_derivative",
    "gronwall_bound",
    "chain_inequality_residual",
    "chain_inequality_residuals",
    "run_property_battery",
]

_DIRECT_CONVOLUTION_MAX = 1 << 14


@dataclass(frozen=True)
class Tolerances:
    """Tolerance constants used by oracle checks and scheme-vs-scheme checks."""

    tol_abs: float = 1e-10
    scheme_constant: float = 10.0

    def scheme_tol(self, dt, alpha):
        """C * dt**(1 - alpha), the L1-scheme consistency scale."""
        return self.scheme_constant * dt ** (1.0 - alpha)


TOLERANCES = Tolerances()


@dataclass(frozen=True)
class FractionalOrders:
    """Orders of the time derivative (alpha) and of the noise derivative (beta).

    ``alpha = 1`` is accepted as the classical limit.  ``kappa0`` only matters
    when ``beta == 1/2``.
    """

    alpha: float
    beta: float
    kappa0: float = 0.01

    def __post_init__(self):
        check_scalar(self.alpha, "alpha", lower=0.0, upper=1.0, lower_inclusive=False)
        check_scalar(self.beta, "beta")
        check_scalar(self.kappa0, "kappa0", lower=0.0, upper=0.05, lower_inclusive=False)
        if not self.beta < 0.75 * self.alpha + 0.5:
            raise AdmissibilityError(
                f"beta < 3*alpha/4 + 1/2 violated: beta={self.beta}, alpha={self.alpha}",
                condition="beta < 3*alpha/4 + 1/2",
            )

    @property
    def c0(self):
        """(2 beta - 1)_+ / alpha, plus kappa0 exactly at beta = 1/2."""
        c = max(2.0 * self.beta - 1.0, 0.0) / self.alpha
        if self.beta == 0.5:
            c += self.kappa0
        return c

    @property
    def classical(self):
        return self.alpha == 1.0

    @property
    def noise_regime(self):
        """'smoothing' for beta < 1/2, 'critical' at 1/2, 'roughening' above."""
        if self.beta < 0.5:
            return "smoothing"
        return "critical" if self.beta == 0.5 else "roughening"

    def check_admissible(self, d):
        """Raise AdmissibilityError unless (alpha, beta, d) are admissible."""
        if d not in (1, 2, 3):
            raise AdmissibilityError(f"dimension must be 1, 2 or 3, got {d}", condition="d in {1,2,3}")
        if not d < 4.0 - 2.0 * self.c0:
            raise AdmissibilityError(
                f"d < 4 - 2*c0 violated: d={d}, c0={self.c0:.6g}", condition="d < 4 - 2*c0"
            )
        return self


@dataclass(frozen=True)
class TimeSeries:
    """Real samples ``values[n] = f(n * dt)`` on a uniform grid starting at 0."""

    values: np.ndarray
    dt: float

    def __post_init__(self):
        vals = check_finite_array(self.values, "values", ndim=1, min_length=2)
        object.__setattr__(self, "values", vals)
        check_scalar(self.dt, "dt", lower=0.0, lower_inclusive=False)

    @classmethod
    def from_function(cls, func, t_end, n):
        """Sample ``func`` at ``n + 1`` points on ``[0, t_end]``."""
        t = np.linspace(0.0, t_end, n + 1)
        return cls(np.asarray(func(t), dtype=float), t_end / n)

    @property
    def t(self):
        return self.dt * np.arange(self.values.size)

    def __len__(self):
        return self.values.size


def _causal_convolve(weights, x):
    """y[n] = sum_{j<=n} weights[n-j] x[j] for n < len(x)."""
    n = x.size
    if n <= _DIRECT_CONVOLUTION_MAX:
        return np.convolve(weights[:n], x)[:n]
    return fftconvolve(weights[:n], x)[:n]


def _second_difference_of_power(m, p):
    """(m+1)^p - 2 m^p + (m-1)^p for m >= 1, without cancellation."""
    m = np.asarray(m, dtype=float)
    inv = 1.0 / m
    up = np.expm1(p * np.log1p(inv))
    with np.errstate(divide="ignore"):
        down = np.expm1(p * np.log1p(-inv))  # m = 1 gives expm1(-inf) = -1
    return m ** p * (up + down)


def _rl_weights(n, alpha):
    """Product-trapezoid weights: c[m] multiplies f[n-m] for m < n; a0[n] multiplies f[0]."""
    m = np.arange(n, dtype=float)
    c = np.empty(n)
    c[0] = 1.0
    if n > 1:
        c[1:] = _second_difference_of_power(m[1:], alpha + 1.0)
    a0 = np.zeros(n)
    if n > 1:
        k = m[1:]
        a0[1:] = (k - 1.0) ** (alpha + 1.0) - (k - alpha - 1.0) * k ** alpha
    return c, a0


def rl_integral(f, alpha):
    """Riemann-Liouville integral of order ``alpha`` by product trapezoid.

    The piecewise-linear interpolant of ``f`` is integrated exactly against the
    kernel (t - s)^(alpha - 1) / Gamma(alpha).

    Parameters
    ----------
    f : TimeSeries
    alpha : float
        Order, > 0.

    Returns
    -------
    TimeSeries
        Same grid; ``values[0] == 0``.
    """
    alpha = check_scalar(alpha, "alpha", lower=0.0, lower_inclusive=False)
    x = f.values
    n = x.size
    c, a0 = _rl_weights(n, alpha)
    out = np.zeros(n)
    # j >= 1 terms: sum_{j=1}^{i} c[i-j] x[j]
    conv = _causal_convolve(c, x[1:])
    out[1:] = conv + a0[1:] * x[0]
    out *= f.dt ** alpha / gamma(alpha + 2.0)
    out[0] = 0.0
    return TimeSeries(out, f.dt)


def _check_unit_order(alpha):
    return check_scalar(alpha, "alpha", lower=0.0, upper=1.0,
                        lower_inclusive=False, upper_inclusive=False)


def caputo_derivative(f, alpha):
    """Caputo derivative of order ``alpha`` in (0, 1) by the L1 scheme."""
    alpha = _check_unit_order(alpha)
    x = f.values
    n = x.size
    m = np.arange(n - 1, dtype=float)
    b = (m + 1.0) ** (1.0 - alpha) - m ** (1.0 - alpha)
    incr = np.diff(x)
    out = np.zeros(n)
    out[1:] = _causal_convolve(b, incr)
    out *= f.dt ** (-alpha) / gamma(2.0 - alpha)
    return TimeSeries(out, f.dt)


def rl_derivative(f, alpha):
    """Riemann-Liouville derivative d/dt I^(1-alpha) f, first-order differenced."""
    alpha = _check_unit_order(alpha)
    j = rl_integral(f, 1.0 - alpha).values
    out = np.zeros_like(j)
    out[1:] = np.diff(j) / f.dt
    return TimeSeries(out, f.dt)


def gronwall_bound(psi0, n1, alpha, t, sharp=False):
    """Upper bound for psi(t) when psi <= psi0 + n1 * I^alpha psi on [0, t].

    Returns psi0 * (1 + E_alpha(n1 Gamma(alpha) t^alpha)): the series of the
    fractional Gronwall lemma with Gamma(k alpha) k alpha read as
    Gamma(k alpha + 1), so its k = 0 term is 1.  ``sharp=True`` drops the
    leading ``1 +`` and returns the classical Mittag-Leffler bound.

    ``t`` may be an array.  On overflow the result saturates to ``inf`` and a
    RuntimeWarning is issued.
    """
    psi0 = check_scalar(psi0, "psi0", lower=0.0)
    n1 = check_scalar(n1, "n1", lower=0.0)
    alpha = check_scalar(alpha, "alpha", lower=0.0, upper=1.0, lower_inclusive=False)
    t_arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t_arr)) or np.any(t_arr < 0):
        raise DomainError("t must be finite and nonnegative")
    if psi0 == 0.0:
        out = np.zeros_like(t_arr)
        return float(out) if out.ndim == 0 else out
    x = n1 * gamma(alpha) * t_arr ** alpha
    try:
        series = np.asarray(mittag_leffler(x, alpha, 1.0), dtype=float)
    except NumericalFailure:
        series = np.full_like(x, math.inf)
    if not np.all(np.isfinite(series)):
        warnings.warn("Gronwall bound overflowed; returning inf", RuntimeWarning, stacklevel=2)
        series = np.where(np.isfinite(series), series, math.inf)
    out = psi0 * (series if sharp else 1.0 + series)
    return float(out) if out.ndim == 0 else out


def chain_inequality_residuals(psi, k, alpha):
    """Pointwise 2^k psi |psi|^(2^k - 2) d^a psi - d^a(psi^(2^k)), n >= 1."""
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    k = int(k)
    p = 2 ** k
    x = psi.values
    lhs = p * x * np.abs(x) ** (p - 2) * caputo_derivative(psi, alpha).values
    rhs = caputo_derivative(TimeSeries(x ** p, psi.dt), alpha).values
    return (lhs - rhs)[1:]


def chain_inequality_residual(psi, k, alpha):
    """Minimum over grid points n >= 1 of the chain-rule inequality gap.

    A nonnegative value (up to rounding) certifies the inequality
    d^a(psi^(2^k)) <= 2^k psi |psi|^(2^k - 2) d^a psi on this sample.
    """
    return float(np.min(chain_inequality_residuals(psi, k, alpha)))


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: dict = field(default_factory=dict)


def run_property_battery(n=2 ** 12, t_end=2.0, seed=0):
    """Semigroup, left-inverse, monomial, chain-rule and Gronwall checks.

    Returns a list of :class:`CheckResult`; used by the ``frac-check`` command.
    """
    rng = np.random.default_rng(seed)
    results = []
    f = TimeSeries.from_function(np.sin, t_end, n)

    lhs = rl_integral(rl_integral(f, 0.4), 0.3).values
    rhs = rl_integral(f, 0.7).values
    err = float(np.max(np.abs(lhs - rhs)))
    results.append(CheckResult("semigroup I^0.3 I^0.4 = I^0.7", err, 5e-4, err <= 5e-4))

    errs = []
    for m in (n // 2, n):
        g = TimeSeries.from_function(np.sin, t_end, m)
        back = caputo_derivative(rl_integral(g, 0.5), 0.5).values
        errs.append(float(np.max(np.abs(back - g.values))))
    order = math.log2(errs[0] / errs[1])
    results.append(CheckResult("left inverse d^0.5 I^0.5 = id", errs[1], 5e-2,
                               errs[1] <= 5e-2 and order >= 0.5, {"order": order}))

    cube = TimeSeries.from_function(lambda s: s ** 3, 1.0, 2 ** 12)
    exact = gamma(4.0) / gamma(3.3)
    err = abs(caputo_derivative(cube, 0.7).values[-1] - exact)
    results.append(CheckResult("Caputo monomial rule t^3, alpha=0.7", err, 1e-3, err <= 1e-3))

    worst = math.inf
    t = np.linspace(0.0, 1.0, 1025)
    for _ in range(20):
        psi = _random_bump(t, rng)
        for kk in (1, 2, 3):
            for a in (0.3, 0.6, 0.9):
                r = chain_inequality_residual(TimeSeries(psi, t[1]), kk, a)
                worst = min(worst, r / TOLERANCES.scheme_tol(t[1], a))
    results.append(CheckResult("chain inequality (scaled by C dt^(1-alpha))", worst, -1.0, worst >= -1.0))

    worst_ratio = 0.0
    for _ in range(20):
        psi0, n1, a = rng.uniform(0.1, 2.0), rng.uniform(0.0, 3.0), rng.uniform(0.3, 0.95)
        psi = gronwall_extremal(psi0, n1, a, 1.0, 512, delta=rng.uniform(0.0, 0.5) * psi0)
        bound = gronwall_bound(psi0, n1, a, psi.t)
        worst_ratio = max(worst_ratio, float(np.max(psi.values / bound)))
    results.append(CheckResult("Gronwall bound dominates", worst_ratio, 1.0 + 1e-6,
                               worst_ratio <= 1.0 + 1e-6))
    return results


def _random_bump(t, rng, n_modes=6):
    """Band-limited random function on [0, 1] vanishing at t = 0."""
    coef = rng.normal(size=n_modes) / (1.0 + np.arange(n_modes))
    s = sum(c * np.sin((j + 1) * np.pi * t / 2.0) for j, c in enumerate(coef))
    return s * t


def gronwall_extremal(psi0, n1, alpha, t_end, n, delta=0.0):
    """Solve psi = psi0 + n1 I^alpha psi - delta on a grid (product trapezoid, implicit)."""
    dt = t_end / n
    c, a0 = _rl_weights(n + 1, alpha)
    scale = dt ** alpha / gamma(alpha + 2.0)
    if n1 * scale * c[0] >= 1.0:
        raise DomainError("time step too coarse for n1: the implicit step is not solvable")
    psi = np.empty(n + 1)
    psi[0] = psi0 - delta
    for i in range(1, n + 1):
        hist = a0[i] * psi[0] + np.dot(c[1:i][::-1], psi[1:i]) if i > 1 else a0[i] * psi[0]
        psi[i] = (psi0 - delta + n1 * scale * hist) / (1.0 - n1 * scale * c[0])
    return TimeSeries(psi, dt)
