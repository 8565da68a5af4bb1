"""Fundamental solution of the time-fractional heat equation and derived kernels.

Only the Fourier symbols are used by the solver.  The real-space kernels below
are a diagnostic surface: they invert the radial symbol numerically and are
used to check mass, positivity, scaling and tail decay.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import j0, rgamma, roots_legendre, sici, it2j0y0

from ._validation import check_scalar
from .exceptions import DomainError, NumericalFailure
from .frac_calculus import FractionalOrders
from .mittag_leffler import mittag_leffler

__all__ = [
    "KernelQuery",
    "DecayFit",
    "q_symbol",
    "p_realspace",
    "q_realspace",
    "p_profile",
    "q_profile",
    "kernel_mass",
    "check_scaling",
    "check_decay",
]

_GL_NODES, _GL_WEIGHTS = roots_legendre(16)
_TAIL_LAMBDA = {1: 1.0e5, 2: 1.0e6}  # t^alpha Xi^2 at which the head integral stops


@dataclass(frozen=True)
class KernelQuery:
    """Evaluation point for a real-space kernel: t > 0, x in R^d (d = 1 or 2)."""

    orders: FractionalOrders
    d: int
    t: float
    x: tuple

    def __post_init__(self):
        if self.d not in (1, 2):
            raise DomainError(f"d must be 1 or 2, got {self.d}")
        check_scalar(self.t, "t", lower=0.0, lower_inclusive=False)
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.shape != (self.d,):
            raise ValueError(f"x must have {self.d} components, got shape {x.shape}")
        object.__setattr__(self, "x", tuple(float(v) for v in x))

    @property
    def radius(self):
        return float(np.hypot.reduce(self.x)) if self.d > 1 else abs(self.x[0])


def _second_param(orders):
    b = orders.alpha - orders.beta + 1.0
    if b <= 0:
        raise DomainError(f"alpha - beta + 1 must be positive, got {b}")
    return b


def q_symbol(orders, t, xi_sq):
    """Fourier symbol of q_{alpha,beta}(t, .): t^(alpha-beta) E_{alpha, alpha-beta+1}(-t^alpha xi^2).

    The same closed form covers alpha >= beta (fractional integral of the heat
    symbol) and alpha < beta (fractional derivative).  Broadcasts over ``t``
    and ``xi_sq``; ``t`` must be positive.
    """
    if not orders.beta < orders.alpha + 0.5:
        raise DomainError("q_symbol requires beta < alpha + 1/2")
    b = _second_param(orders)
    t = np.asarray(t, dtype=float)
    xi_sq = np.asarray(xi_sq, dtype=float)
    if np.any(t <= 0) or np.any(xi_sq < 0):
        raise DomainError("q_symbol needs t > 0 and xi_sq >= 0")
    ta = t ** orders.alpha
    return t ** (orders.alpha - orders.beta) * mittag_leffler(-ta * xi_sq, orders.alpha, b)


def _radial_inverse(symbol, c1, d, radii, t_scale, xi_max):
    """(2 pi)^-d times the integral of e^{i xi.x} S(|xi|) over R^d, at each radius.

    ``symbol(xi)`` is evaluated on [0, xi_max] by composite Gauss-Legendre;
    beyond xi_max it is replaced by c1 / xi^2, whose tail integral is closed
    form (sine integral in 1D, the J0(u)/u integral in 2D).
    """
    radii = np.asarray(radii, dtype=float)
    r_max = float(radii.max()) if radii.size else 0.0
    width = 0.5 * t_scale
    if r_max > 0:
        width = min(width, 0.5 * np.pi / r_max)
    n_panels = int(np.ceil(xi_max / width))
    edges = np.linspace(0.0, xi_max, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    xi = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    sym = symbol(xi) * w
    if d == 2:
        sym = sym * xi
    out = np.empty(radii.shape)
    for i, r in enumerate(radii.ravel()):
        if d == 1:
            head = np.dot(np.cos(xi * r), sym) / np.pi
            if r == 0:
                tail = c1 / xi_max / np.pi
            else:
                si, _ = sici(xi_max * r)
                tail = c1 * (np.cos(xi_max * r) / xi_max - r * (0.5 * np.pi - si)) / np.pi
        else:
            if r == 0:
                raise DomainError("the 2D kernel is singular at the origin")
            head = np.dot(j0(xi * r), sym) / (2.0 * np.pi)
            u = xi_max * r
            tail = c1 * (-np.euler_gamma - np.log(0.5 * u) + it2j0y0(u)[0]) / (2.0 * np.pi)
        out.flat[i] = head + tail
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("kernel quadrature produced non-finite values",
                               {"d": d, "xi_max": xi_max, "panels": n_panels})
    return out


def q_profile(orders, d, t, radii):
    """q_{alpha,beta}(t, x) for |x| in ``radii`` (vectorised over radii)."""
    t = check_scalar(t, "t", lower=0.0, lower_inclusive=False)
    alpha = orders.alpha
    b = _second_param(orders)
    ta = t ** alpha
    xi_max = np.sqrt(_TAIL_LAMBDA[d] / ta)
    prefactor = t ** (alpha - orders.beta)
    # E_{a,b}(-x) ~ x^-1 / Gamma(b - a): leading tail coefficient in xi^-2
    c1 = prefactor * rgamma(b - alpha) / ta

    def symbol(xi):
        return prefactor * mittag_leffler(-ta * xi * xi, alpha, b)

    return _radial_inverse(symbol, c1, d, radii, ta ** -0.5, xi_max)


def p_profile(orders, d, t, radii):
    """Fundamental solution p(t, x) for |x| in ``radii``."""
    return q_profile(FractionalOrders(orders.alpha, orders.alpha, orders.kappa0), d, t, radii)


def p_realspace(query):
    """p(t, x) by inverse Fourier transform of E_alpha(-t^alpha |xi|^2).

    d = 1 uses a cosine transform, d = 2 a Hankel (J0) transform.
    """
    return float(p_profile(query.orders, query.d, query.t, [query.radius])[0])


def q_realspace(query):
    """q_{alpha,beta}(t, x), same pipeline as :func:`p_realspace`."""
    return float(q_profile(query.orders, query.d, query.t, [query.radius])[0])


def kernel_mass(orders, t, extent=25.0, panels=40):
    """Integral of p(t, .) over [-X, X] in 1D, X = extent * t^(alpha/2).

    Composite 16-point Gauss-Legendre on [0, X], doubled by symmetry.
    """
    x_max = extent * t ** (orders.alpha / 2.0)
    edges = np.linspace(0.0, x_max, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return 2.0 * float(np.dot(p_profile(orders, 1, t, x), w))


def check_scaling(orders, d, t1, t2, x):
    """Relative residual of q(t, x) = t^(-alpha d/2 + alpha - beta) q(1, x t^(-alpha/2)).

    The identity is checked at ``t1`` and ``t2`` (both against t = 1) and the
    larger relative residual is returned.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    r = float(np.hypot.reduce(x)) if x.size > 1 else abs(float(x[0]))
    alpha, beta = orders.alpha, orders.beta
    worst = 0.0
    for t in (t1, t2):
        t = check_scalar(t, "t", lower=0.0, lower_inclusive=False)
        direct = q_profile(orders, d, t, [r])[0]
        if t == 1.0:
            continue
        scaled = t ** (-alpha * d / 2.0 + alpha - beta) * q_profile(
            orders, d, 1.0, [r * t ** (-alpha / 2.0)])[0]
        worst = max(worst, abs(direct - scaled) / max(abs(direct), 1e-300))
    return worst


@dataclass(frozen=True)
class DecayFit:
    """Fitted tail bound p(t, x) <= N |x|^-d exp(-c |x|^(2/(2-alpha)) t^(-alpha/(2-alpha)))."""

    N: float
    c: float
    residual: float      # rms log-residual of the fit / spread of the log data
    max_ratio: float     # max p / bound over the samples (<= 1 by construction)
    n_samples: int

    @property
    def finite(self):
        return bool(np.isfinite(self.N) and np.isfinite(self.c))


def check_decay(orders, d, t, samples):
    """Fit the smallest (N, c) of the stretched-exponential tail bound.

    ``samples`` are points (or radii) with |x|^2 >= t^alpha.  A straight line
    is fitted to log(p |x|^d) against the stretched variable; its slope gives
    c, and N is then raised until the bound holds at every sample.
    """
    t = check_scalar(t, "t", lower=0.0, lower_inclusive=False)
    pts = np.asarray(samples, dtype=float)
    if pts.size == 0:
        raise ValueError("check_decay needs at least one sample point")
    radii = np.abs(pts) if pts.ndim <= 1 else np.hypot.reduce(pts, axis=-1)
    radii = np.atleast_1d(radii)
    alpha = orders.alpha
    if np.any(radii ** 2 < t ** alpha * (1 - 1e-12)):
        raise DomainError("all samples must satisfy |x|^2 >= t^alpha")
    if radii.size < 2:
        raise ValueError("check_decay needs at least two distinct radii to fit")
    p = p_profile(orders, d, t, radii)
    if np.any(p <= 0):
        raise NumericalFailure("nonpositive kernel values in the decay window",
                               {"min": float(p.min())})
    y = np.log(p) + d * np.log(radii)
    z = radii ** (2.0 / (2.0 - alpha)) * t ** (-alpha / (2.0 - alpha))
    slope, intercept = np.polyfit(z, y, 1)
    c = -slope
    resid = y - (intercept + slope * z)
    spread = max(float(np.ptp(y)), 1e-300)
    log_n = float(np.max(y + c * z))
    bound = np.exp(log_n - d * np.log(radii) - c * z)
    return DecayFit(N=float(np.exp(log_n)), c=float(c),
                    residual=float(np.sqrt(np.mean(resid ** 2)) / spread),
                    max_ratio=float(np.max(p / bound)), n_samples=int(radii.size))
