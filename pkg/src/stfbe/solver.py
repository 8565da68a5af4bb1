"""Mild-solution operators and the stochastic time-fractional Burgers stepper.

Everything is done per Fourier mode on the periodic box.  For the operator
L = a * Laplacian the mild solution reads

    u(t_n) = T1 u0 + sum_{j<n} W2[n-j] * N(u_j) + sum_{j<n} W3[n-j] * sigma(u_j) dW_j

with W2 the exact integral of the deterministic kernel q_{alpha,1} over each
step and W3 the root-mean-square of q_{alpha,beta} over each step, so that
the discrete Ito isometry matches the continuum one.  History sums are
evaluated by a causal divide-and-conquer convolution: the contribution of
steps [lo, mid) to steps [mid, hi) is one FFT convolution, and nothing from
step j >= n ever enters the arithmetic that produces u_n.
"""

import json
import struct
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import fft as sp_fft
from scipy.signal import fftconvolve
from scipy.special import roots_jacobi, roots_legendre
from sklearn.base import BaseEstimator

from ._validation import check_scalar
from .exceptions import AdmissibilityError, DomainError, NumericalFailure
from .frac_calculus import FractionalOrders
from .kernels import q_symbol
from .mittag_leffler import mittag_leffler
from .noise import FourierBasis, GridSpec, sample_noise

__all__ = [
    "Field",
    "CoefficientSet",
    "SigmaSpec",
    "SolutionPath",
    "rho_cutoff",
    "t1_apply",
    "t2_apply",
    "t3_apply",
    "kernel_tables",
    "solve_stfbe",
    "save_path",
    "load_path",
    "write_sup_norm_csv",
    "StochasticBurgersSolver",
]

BLOWUP_THRESHOLD = 1.0e6
_BASE_BLOCK = 32
ARCHIVE_MAGIC = b"STFP"
ARCHIVE_VERSION = 1


@dataclass(frozen=True)
class Field:
    """Real values on the spatial grid of ``grid``."""

    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            vals = vals.reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)


def _as_values(u, grid):
    if isinstance(u, Field):
        return u.values
    arr = np.asarray(u, dtype=float)
    return arr.reshape(grid.shape)


# --------------------------------------------------------------------------
# coefficients

def _resolve(spec, t, coords, shape):
    """Grid values of a coefficient given as None, constant(s), array or callable."""
    if spec is None:
        return None
    if callable(spec):
        return np.asarray(spec(t, *coords), dtype=float)
    arr = np.asarray(spec, dtype=float)
    if arr.ndim == 0:
        return np.full(shape, float(arr))
    if arr.shape != tuple(shape):
        raise ValueError(f"gridded coefficient must have shape {tuple(shape)}, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients of L u = a Lap u + b . grad u + c u and of the nonlinearity.

    ``b`` and ``bbar`` are per-axis vectors (a constant per axis, an array of
    shape (d,) + grid shape, or a callable ``f(t, *coords)``); ``c`` is a
    scalar field in the same formats.  ``bbar[i]`` must not depend on x^i.
    ``None`` switches a term off.
    """

    a: float = 1.0
    b: object = None
    c: object = None
    bbar: object = None
    bound: float = 10.0

    def __post_init__(self):
        check_scalar(self.bound, "bound", lower=0.0, lower_inclusive=False)
        a = check_scalar(self.a, "a", lower=0.0, lower_inclusive=False)
        if not 1.0 / self.bound <= a <= self.bound:
            raise AdmissibilityError(f"1/K <= a <= K violated: a={a}, K={self.bound}",
                                     condition="1/K <= a <= K")

    @property
    def has_drift(self):
        def active(spec):
            if spec is None:
                return False
            if callable(spec):
                return True
            return bool(np.any(np.asarray(spec, dtype=float) != 0))
        return active(self.b) or active(self.c) or active(self.bbar)

    def _vector(self, spec, t, grid, coords):
        if spec is None:
            return None
        if callable(spec):
            val = np.asarray(spec(t, *coords), dtype=float)
        else:
            val = np.asarray(spec, dtype=float)
        if val.ndim == 0:
            val = np.full((grid.d,), float(val))
        if val.shape == (grid.d,):
            val = val.reshape((grid.d,) + (1,) * grid.d) * np.ones((grid.d,) + grid.shape)
        if val.shape != (grid.d,) + grid.shape:
            raise ValueError(f"vector coefficient must have shape {(grid.d,) + grid.shape}, got {val.shape}")
        return val

    def evaluate(self, t, grid, coords=None):
        """(b, c, bbar) as grid arrays (or None) at time t."""
        coords = grid.coordinates() if coords is None else coords
        b = self._vector(self.b, t, grid, coords)
        bbar = self._vector(self.bbar, t, grid, coords)
        c = None
        if self.c is not None:
            c = np.asarray(self.c(t, *coords) if callable(self.c) else self.c, dtype=float)
            c = c * np.ones(grid.shape)
        return b, c, bbar

    def time_dependent(self):
        return any(callable(s) for s in (self.b, self.c, self.bbar))

    def validate(self, grid, times=None):
        """Sampled check of the sup bounds and of the x^i-independence of bbar^i."""
        times = [0.0, grid.t_end] if times is None else times
        for t in times:
            b, c, bbar = self.evaluate(t, grid)
            for name, val in (("b", b), ("c", c), ("bbar", bbar)):
                if val is None:
                    continue
                if not np.all(np.isfinite(val)):
                    raise AdmissibilityError(f"{name} has non-finite values", condition=f"{name} finite")
                if np.max(np.abs(val)) > self.bound:
                    raise AdmissibilityError(f"sup |{name}| <= K violated at t={t}",
                                             condition=f"|{name}| <= K")
            if bbar is not None:
                for i in range(grid.d):
                    comp = bbar[i]
                    if np.max(np.abs(comp - np.take(comp, [0], axis=i))) > 1e-12 * max(1.0, np.max(np.abs(comp))):
                        raise AdmissibilityError(f"bbar^{i + 1} depends on x^{i + 1}",
                                                 condition="bbar^i independent of x^i")
        return self


# --------------------------------------------------------------------------
# noise coefficient

_SIGMA_KINDS = ("constant", "additive", "truncated_linear", "gridded")


@dataclass(frozen=True)
class SigmaSpec:
    """Noise coefficient sigma(t, x, u).

    kind
        ``"constant"``: sigma = value.
        ``"additive"``: sigma = h(t, x) (constant, grid array or callable).
        ``"truncated_linear"``: sigma = value * min(|u|, level).
        ``"gridded"``: sigma = func(t, coords, u) with user-declared
        ``lipschitz`` and ``dominator`` (constant, array or callable of t, *coords).
    """

    kind: str = "constant"
    value: float = 1.0
    h: object = None
    level: float = 1.0
    func: object = None
    lipschitz: float = None
    dominator: object = None

    def __post_init__(self):
        if self.kind not in _SIGMA_KINDS:
            raise ValueError(f"sigma kind must be one of {_SIGMA_KINDS}, got {self.kind!r}")
        check_scalar(self.value, "sigma value")
        if self.kind == "truncated_linear":
            check_scalar(self.level, "level", lower=0.0, lower_inclusive=False)
        if self.kind == "gridded" and (self.func is None or self.lipschitz is None):
            raise ValueError("gridded sigma needs func and lipschitz")

    @property
    def depends_on_u(self):
        return self.kind in ("truncated_linear", "gridded")

    @property
    def is_zero(self):
        if self.kind in ("constant", "truncated_linear"):
            return self.value == 0.0
        if self.kind == "additive" and not callable(self.h):
            return self.h is None or bool(np.all(np.asarray(self.h, dtype=float) == 0))
        return False

    @property
    def lipschitz_constant(self):
        if self.kind in ("constant", "additive"):
            return 0.0
        if self.kind == "truncated_linear":
            return abs(self.value)
        return float(self.lipschitz)

    def evaluate(self, t, u, coords):
        if self.kind == "constant":
            return np.full(u.shape, self.value)
        if self.kind == "additive":
            return _resolve(self.h, t, coords, u.shape) * np.ones(u.shape)
        if self.kind == "truncated_linear":
            return self.value * np.minimum(np.abs(u), self.level)
        return np.asarray(self.func(t, coords, u), dtype=float) * np.ones(u.shape)

    def dominating(self, t, coords, shape):
        """The declared |sigma| bound h(t, x) on the grid, or None."""
        if self.kind == "constant":
            return np.full(shape, abs(self.value))
        if self.kind == "additive":
            return np.abs(_resolve(self.h, t, coords, shape) * np.ones(shape))
        if self.kind == "truncated_linear":
            return np.full(shape, abs(self.value) * self.level)
        if self.dominator is None:
            return None
        return np.abs(_resolve(self.dominator, t, coords, shape) * np.ones(shape))

    def check(self, grid, n_samples=64, seed=0, scale=10.0):
        """Sampled check of the Lipschitz and domination contracts."""
        rng = np.random.default_rng(seed)
        coords = grid.coordinates()
        for t in np.linspace(0.0, grid.t_end, 4):
            for _ in range(n_samples // 4):
                u = scale * rng.standard_normal(grid.shape)
                v = u + rng.standard_normal(grid.shape)
                su, sv = self.evaluate(t, u, coords), self.evaluate(t, v, coords)
                if np.any(np.abs(su - sv) > self.lipschitz_constant * np.abs(u - v) * (1 + 1e-12) + 1e-12):
                    raise AdmissibilityError("sigma is not Lipschitz with the declared constant",
                                             condition="|sigma(u)-sigma(v)| <= K|u-v|")
                dom = self.dominating(t, coords, grid.shape)
                if dom is not None and np.any(np.abs(su) > dom * (1 + 1e-12)):
                    raise AdmissibilityError("sigma exceeds its dominator h",
                                             condition="|sigma(t,x,u)| <= |h(t,x)|")
        return self


# --------------------------------------------------------------------------
# solution container

@dataclass
class SolutionPath:
    """Stored fields, sup-norm series and run metadata of one simulated path.

    ``fields[i]`` is u at step ``steps[i]``.  ``sup_norm_series`` has one entry
    per computed step (shorter than n_time + 1 after a blow-up).
    """

    fields: np.ndarray
    steps: np.ndarray
    grid: GridSpec
    orders: FractionalOrders
    sup_norm_series: np.ndarray
    cutoff_m: float = None
    blew_up: bool = False
    blowup_time: float = None
    seed: int = None
    meta: dict = field(default_factory=dict)

    @property
    def times(self):
        return self.grid.dt * self.steps

    def field_at(self, i):
        return Field(self.fields[i], self.grid)

    def header(self):
        g, o = self.grid, self.orders
        return {
            "grid": {"d": g.d, "box_length": g.box_length, "n_space": g.n_space,
                     "n_time": g.n_time, "t_end": g.t_end},
            "orders": {"alpha": o.alpha, "beta": o.beta, "kappa0": o.kappa0},
            "cutoff_m": self.cutoff_m,
            "blew_up": bool(self.blew_up),
            "blowup_time": self.blowup_time,
            "seed": self.seed,
            "steps": [int(s) for s in self.steps],
            "n_sup": int(self.sup_norm_series.size),
            "meta": self.meta,
        }


def save_path(path, sol):
    """Archive: b"STFP", u32 version, u32 header length, JSON header, f64 sup norms, f64 fields."""
    head = json.dumps(sol.header(), sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sII", ARCHIVE_MAGIC, ARCHIVE_VERSION, len(head)))
        fh.write(head)
        fh.write(np.ascontiguousarray(sol.sup_norm_series, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(sol.fields, dtype="<f8").tobytes())


def load_path(path):
    with open(path, "rb") as fh:
        magic, version, n_head = struct.unpack("<4sII", fh.read(12))
        if magic != ARCHIVE_MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != ARCHIVE_VERSION:
            raise ValueError(f"unsupported archive version {version}")
        head = json.loads(fh.read(n_head).decode())
        payload = np.frombuffer(fh.read(), dtype="<f8")
    grid = GridSpec(**head["grid"])
    orders = FractionalOrders(**head["orders"])
    n_sup = head["n_sup"]
    steps = np.asarray(head["steps"], dtype=np.int64)
    fields = payload[n_sup:].reshape((steps.size,) + grid.shape).astype(float)
    return SolutionPath(fields=fields, steps=steps, grid=grid, orders=orders,
                        sup_norm_series=payload[:n_sup].astype(float),
                        cutoff_m=head["cutoff_m"], blew_up=head["blew_up"],
                        blowup_time=head["blowup_time"], seed=head["seed"],
                        meta=head.get("meta", {}))


def write_sup_norm_csv(path, sol):
    with open(path, "w") as fh:
        fh.write("# schema=v1\n")
        fh.write("step,t,sup_norm\n")
        for n, v in enumerate(sol.sup_norm_series):
            fh.write(f"{n},{n * sol.grid.dt!r},{float(v)!r}\n")


# --------------------------------------------------------------------------
# cut-off

def _smooth_zero(x):
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def rho_cutoff(z, m):
    """rho(z / m) with rho = 1 on [-1, 1], 0 off (-2, 2), smooth and monotone between."""
    m = check_scalar(m, "m", lower=0.0, lower_inclusive=False)
    s = np.abs(np.asarray(z, dtype=float)) / m
    out = np.where(s <= 1.0, 1.0, 0.0)
    band = (s > 1.0) & (s < 2.0)
    if np.any(band):
        sb = s[band]
        up = _smooth_zero(2.0 - sb)
        out[band] = up / (up + _smooth_zero(sb - 1.0))
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# kernel tables

def _unique_lambda(grid, a):
    ksq = grid.k_squared()
    lam, inverse = np.unique(a * ksq, return_inverse=True)
    return lam, inverse.reshape(ksq.shape)


def _g_primitive(alpha, t, lam):
    """int_0^t s^(alpha-1) E_{alpha,alpha}(-lam s^alpha) ds = t^alpha E_{alpha,alpha+1}(-lam t^alpha)."""
    ta = t[:, None] ** alpha
    return ta * mittag_leffler(-ta * lam[None, :], alpha, alpha + 1.0)


def _drift_weights(alpha, dt, n, lam):
    """Exact step integrals W2[m] of q_{alpha,1} over [(m-1) dt, m dt], m = 0..n (W2[0] = 0)."""
    g = _g_primitive(alpha, dt * np.arange(n + 1), lam)
    w = np.zeros((n + 1, lam.size))
    w[1:] = np.diff(g, axis=0)
    return w


def _q_squared_first_step(orders, dt, lam, panels_per_octave=1, order=8):
    """int_0^dt q(s)^2 ds with v = s^alpha, geometric panels towards v = 0."""
    alpha, beta = orders.alpha, orders.beta
    b = alpha - beta + 1.0
    gam = (alpha - 2.0 * beta + 1.0) / alpha
    v_top = dt ** alpha
    n_oct = int(np.ceil(np.log2(max(float(lam.max()) * v_top, 1.0) / 1e-2))) + 1
    edges = v_top * 2.0 ** -np.arange(n_oct * panels_per_octave + 1)[::-1] * 1.0
    edges = np.concatenate([[0.0], edges])
    x_gl, w_gl = roots_legendre(order)
    x_gj, w_gj = roots_jacobi(order, 0.0, gam)
    total = np.zeros(lam.size)
    for lo, hi in zip(edges[:-1], edges[1:]):
        if lo == 0.0:
            v = 0.5 * hi * (1.0 + x_gj)
            w = (0.5 * hi) ** (gam + 1.0) * w_gj
            f = mittag_leffler(-np.outer(v, lam), alpha, b) ** 2
        else:
            v = 0.5 * (hi - lo) * x_gl + 0.5 * (hi + lo)
            w = 0.5 * (hi - lo) * w_gl * v ** gam
            f = mittag_leffler(-np.outer(v, lam), alpha, b) ** 2
        total += w @ f
    return total / alpha


def _noise_weights(orders, dt, n, lam):
    """Signed RMS step weights W3[m] = sqrt(int_{(m-1)dt}^{m dt} q^2 / dt), m = 0..n."""
    alpha, beta = orders.alpha, orders.beta
    w = np.zeros((n + 1, lam.size))
    if alpha == 1.0 and beta == 1.0:
        # q = exp(-lam s): the step integrals are elementary
        s0 = dt * np.arange(n)[:, None]
        lam2 = 2.0 * lam[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            integ = np.where(lam2 > 0, np.exp(-lam2 * s0) * -np.expm1(-lam2 * dt) / lam2, dt)
        w[1:] = np.sqrt(integ / dt)
        return w
    w[1] = np.sqrt(_q_squared_first_step(orders, dt, lam) / dt)
    for m_lo, m_hi, order in ((2, min(n, 63), 4), (64, n, 2)):
        if m_lo > m_hi:
            continue
        x, wq = roots_legendre(order)
        m = np.arange(m_lo, m_hi + 1)
        s = dt * (m[:, None] - 0.5 + 0.5 * x[None, :])  # (M, order)
        q = q_symbol(orders, s[..., None], lam[None, None, :])  # (M, order, L)
        integ = 0.5 * dt * np.einsum("o,mol->ml", wq, q * q)
        sign = np.sign(np.einsum("o,mol->ml", wq, q))
        w[m_lo:m_hi + 1] = sign * np.sqrt(integ / dt)
    return w


class KernelTables:
    """Per-mode symbol tables for one (orders, grid, a); built lazily, then read-only."""

    def __init__(self, orders, grid, a):
        self.orders, self.grid, self.a = orders, grid, a
        self.lam, self.inverse = _unique_lambda(grid, a)
        self._cache = {}

    def _get(self, name, build):
        if name not in self._cache:
            table = build()
            table.setflags(write=False)
            self._cache[name] = table
        return self._cache[name]

    def expand(self, table):
        """(rows, unique) -> (rows,) + rfft shape."""
        return table[:, self.inverse]

    @property
    def t1(self):
        g = self.grid
        return self._get("t1", lambda: mittag_leffler(
            -np.outer(g.times ** self.orders.alpha, self.lam), self.orders.alpha, 1.0))

    @property
    def drift(self):
        g = self.grid
        return self._get("drift", lambda: _drift_weights(self.orders.alpha, g.dt, g.n_time, self.lam))

    @property
    def noise(self):
        g = self.grid
        return self._get("noise", lambda: _noise_weights(self.orders, g.dt, g.n_time, self.lam))


@lru_cache(maxsize=16)
def kernel_tables(orders, grid, a=1.0):
    """Memoised :class:`KernelTables`."""
    return KernelTables(orders, grid, float(a))


# --------------------------------------------------------------------------
# linear operators

def _rfft(values, d):
    return np.fft.rfftn(values, axes=tuple(range(-d, 0)))


def _irfft(spec, grid):
    return np.fft.irfftn(spec, s=grid.shape, axes=tuple(range(-grid.d, 0)))


def t1_apply(u0, t, orders, a=1.0, grid=None):
    """E_alpha(-a t^alpha |k|^2) applied to every Fourier mode of u0."""
    grid = u0.grid if isinstance(u0, Field) else grid
    t = check_scalar(t, "t", lower=0.0)
    values = _as_values(u0, grid)
    if t == 0.0:
        return Field(values.copy(), grid)
    sym = mittag_leffler(-(t ** orders.alpha) * a * grid.k_squared(), orders.alpha, 1.0)
    return Field(_irfft(sym * _rfft(values, grid.d), grid), grid)


def _causal_history(weights, x):
    """y[n] = sum_{j<n} weights[n-j] x[j] along axis 0 (weights[0] is ignored)."""
    n = x.shape[0]
    w = np.array(weights[:n + 1], copy=True)
    w[0] = 0.0
    y = np.zeros((n + 1,) + x.shape[1:], dtype=np.result_type(x, w))
    y[1:] = fftconvolve(w[1:n + 1], x, axes=0)[:n]
    return y


def t2_apply(f, grid, orders, a=1.0):
    """Deterministic Volterra term: u_n = sum_{j<n} W2[n-j] f_j per mode.

    ``f`` has shape (n_time + 1,) + grid.shape or (n_time,) + grid.shape; the
    result has n_time + 1 rows and row 0 is zero.
    """
    f = np.asarray(f, dtype=float)
    f = f[:grid.n_time]
    if f.shape != (grid.n_time,) + grid.shape:
        raise ValueError(f"f must have {grid.n_time} (or one more) rows on the grid, got {f.shape}")
    tab = kernel_tables(orders, grid, a)
    spec = _causal_history(tab.expand(tab.drift), _rfft(f, grid.d))
    return _irfft(spec, grid)


def t3_apply(sigma_path, noise, orders, a=1.0):
    """Stochastic convolution u_n = sum_{j<n} W3[n-j] * (sigma_j dW_j) per mode.

    ``sigma_path`` holds sigma at the left end of every step, shape
    (n_time,) + grid.shape; ``noise.grid`` fixes the box.
    """
    grid = noise.grid
    sig = np.asarray(sigma_path, dtype=float)
    if sig.shape != (grid.n_time,) + grid.shape:
        raise ValueError(f"sigma_path must have shape {(grid.n_time,) + grid.shape}, got {sig.shape}")
    dw = FourierBasis(grid).synthesize(noise.increments)
    tab = kernel_tables(orders, grid, a)
    spec = _causal_history(tab.expand(tab.noise), _rfft(sig * dw, grid.d))
    return _irfft(spec, grid)


# --------------------------------------------------------------------------
# nonlinear stepper

class _BlowUp(Exception):
    def __init__(self, step):
        self.step = step


def _dealias_mask(grid):
    n = grid.n_space
    comps = [np.abs(np.fft.fftfreq(n, 1.0 / n))] * (grid.d - 1) + [np.arange(n // 2 + 1)]
    mesh = np.meshgrid(*comps, indexing="ij")
    keep = np.ones(mesh[0].shape, dtype=bool)
    for m in mesh:
        keep &= m <= n // 3
    return keep


def _resolve_cutoff(cutoff_m, u0):
    if cutoff_m is None:
        return None
    if isinstance(cutoff_m, str):
        if cutoff_m != "auto":
            raise ValueError(f"cutoff_m must be a number, 'auto' or None, got {cutoff_m!r}")
        sup = float(np.max(np.abs(u0)))
        return 100.0 * sup if sup > 0 else None
    return check_scalar(cutoff_m, "cutoff_m", lower=0.0, lower_inclusive=False)


def solve_stfbe(grid, orders, coeffs, sigma, u0, noise=None, cutoff_m="auto",
                blowup_threshold=BLOWUP_THRESHOLD, store_every=1, seed=None,
                validate=True):
    """Simulate one path of the localised stochastic fractional Burgers equation.

    Parameters
    ----------
    grid : GridSpec
    orders : FractionalOrders
    coeffs : CoefficientSet
    sigma : SigmaSpec
    u0 : Field or ndarray
    noise : NoiseRealization, optional
        Drawn from ``seed`` with full truncation when omitted.
    cutoff_m : float, "auto" or None
        Level m of the cut-off rho_m in the quadratic term; "auto" uses
        100 * sup|u0| (no cut-off when u0 = 0).
    blowup_threshold : float
        The run halts once sup|u| exceeds this or turns non-finite.
    store_every : int
        Stride of the stored fields; the final computed step is always kept.

    Returns
    -------
    SolutionPath
    """
    orders.check_admissible(grid.d)
    u0 = _as_values(u0, grid).astype(float)
    if not np.all(np.isfinite(u0)):
        raise ValueError("u0 must be finite")
    if validate:
        coeffs.validate(grid)
    m_level = _resolve_cutoff(cutoff_m, u0)
    store_every = int(store_every)
    if store_every < 1:
        raise ValueError("store_every must be >= 1")
    n_time, d = grid.n_time, grid.d
    coords = grid.coordinates()
    tab = kernel_tables(orders, grid, coeffs.a)
    has_noise = not sigma.is_zero
    has_drift = coeffs.has_drift
    if has_noise:
        if noise is None:
            noise = sample_noise(grid, seed=0 if seed is None else seed)
        if noise.n_time != n_time:
            raise ValueError("noise realization does not match the time grid")
        seed = noise.seed if seed is None else seed
        dw = FourierBasis(grid).synthesize(noise.increments)
        w3 = tab.expand(tab.noise)
    if has_drift:
        w2 = tab.expand(tab.drift)
        kvec = grid.wavenumbers()
        keep = _dealias_mask(grid)
        const_coeffs = None if coeffs.time_dependent() else coeffs.evaluate(0.0, grid, coords)
        b_max = 0.0
        if const_coeffs is not None:
            for val in (const_coeffs[0], const_coeffs[2]):
                if val is not None:
                    b_max = max(b_max, float(np.max(np.abs(val))))
        scale = b_max * max(1.0, float(np.max(np.abs(u0))))
        if scale * grid.dt * np.pi / grid.dx > 1.0:
            warnings.warn("advective CFL number exceeds 1; the explicit drift may be unstable",
                          RuntimeWarning, stacklevel=2)
    u0_hat = _rfft(u0, d)
    use_t1 = bool(np.any(u0 != 0))
    t1 = tab.expand(tab.t1) if use_t1 else None

    spec_shape = grid.rfft_shape()
    hist = np.zeros((n_time + 1,) + spec_shape, dtype=complex)
    x_drift = np.zeros((n_time,) + spec_shape, dtype=complex) if has_drift else None
    x_noise = np.zeros((n_time,) + spec_shape, dtype=complex) if has_noise else None
    sup = np.empty(n_time + 1)
    stored_steps = [n for n in range(0, n_time + 1, store_every)]
    if stored_steps[-1] != n_time:
        stored_steps.append(n_time)
    slot = {n: i for i, n in enumerate(stored_steps)}
    fields = np.empty((len(stored_steps),) + grid.shape)
    dom_check = sigma.kind == "gridded" and sigma.dominator is not None

    def drift_term(t, u, u_hat):
        b, c, bbar = const_coeffs if const_coeffs is not None else coeffs.evaluate(t, grid, coords)
        out = np.zeros(spec_shape, dtype=complex)
        if bbar is not None:
            sq = 0.5 * u * u
            if m_level is not None:
                sq = sq * rho_cutoff(u, m_level)
            for i in range(d):
                out += 1j * kvec[i] * _rfft(bbar[i] * sq, d)
            out *= keep
        if b is not None:
            adv = sum(b[i] * _irfft(1j * kvec[i] * u_hat, grid) for i in range(d))
            out += _rfft(adv, d)
        if c is not None:
            out += _rfft(c * u, d)
        return out

    def step(n):
        u_hat = hist[n] + t1[n] * u0_hat if use_t1 else hist[n]
        u = _irfft(u_hat, grid)
        s = float(np.max(np.abs(u)))
        sup[n] = s
        if not np.isfinite(s) or s > blowup_threshold:
            raise _BlowUp(n)
        if n in slot:
            fields[slot[n]] = u
        if n == n_time:
            return
        t = n * grid.dt
        if has_drift:
            x_drift[n] = drift_term(t, u, u_hat)
        if has_noise:
            sig = sigma.evaluate(t, u, coords)
            if dom_check and np.any(np.abs(sig) > sigma.dominating(t, coords, grid.shape) * (1 + 1e-12)):
                raise AdmissibilityError("sigma exceeds its dominator h during the run",
                                         condition="|sigma(t,x,u)| <= |h(t,x)|")
            x_noise[n] = _rfft(sig * dw[n], d)

    kernel_fft = {}

    def scatter(lo, mid, hi):
        # contributions of inputs j in [lo, mid) to states n in [mid, hi)
        lo_in, mid_in = lo, min(mid, n_time)
        if mid_in <= lo_in:
            return
        length = hi - lo
        for x, w in ((x_drift, w2 if has_drift else None), (x_noise, w3 if has_noise else None)):
            if x is None:
                continue
            if mid_in - lo_in <= 8 or length <= 2 * _BASE_BLOCK:
                for j in range(lo_in, mid_in):
                    hist[mid:hi] += w[mid - j:hi - j] * x[j]
            else:
                n_in = mid_in - lo_in
                nfft = sp_fft.next_fast_len(n_in + length - 1)
                key = (id(w), length, nfft)
                if key not in kernel_fft:
                    kernel_fft[key] = sp_fft.fft(w[:length], nfft, axis=0)
                conv = sp_fft.ifft(sp_fft.fft(x[lo_in:mid_in], nfft, axis=0) * kernel_fft[key],
                                   axis=0)
                hist[mid:hi] += conv[mid - lo:hi - lo]

    def solve(lo, hi):
        if hi - lo <= _BASE_BLOCK:
            for n in range(lo, hi):
                step(n)
                if n + 1 < hi and n < n_time:
                    for x, w in ((x_drift, w2 if has_drift else None),
                                 (x_noise, w3 if has_noise else None)):
                        if x is not None:
                            hist[n + 1:hi] += w[1:hi - n] * x[n]
            return
        mid = (lo + hi) // 2
        solve(lo, mid)
        scatter(lo, mid, hi)
        solve(mid, hi)

    blew_up, blowup_time, last = False, None, n_time
    try:
        solve(0, n_time + 1)
    except _BlowUp as exc:
        blew_up, blowup_time, last = True, exc.step * grid.dt, exc.step
    finally:
        # solve refers to itself through its closure cell; clearing the cells
        # frees the work arrays now instead of at the next full gc pass
        solve = scatter = step = drift_term = None
        kernel_fft.clear()
    if blew_up:
        keep_idx = [i for i, n in enumerate(stored_steps) if n < last]
        steps = np.asarray([stored_steps[i] for i in keep_idx], dtype=np.int64)
        fields = fields[keep_idx]
        sup = sup[:last + 1]
    else:
        steps = np.asarray(stored_steps, dtype=np.int64)
    return SolutionPath(fields=fields, steps=steps, grid=grid, orders=orders,
                        sup_norm_series=sup, cutoff_m=m_level, blew_up=blew_up,
                        blowup_time=blowup_time, seed=None if seed is None else int(seed))


# --------------------------------------------------------------------------
# estimator facade

class StochasticBurgersSolver(BaseEstimator):
    """scikit-learn style front end to :func:`solve_stfbe`.

    ``fit`` validates the configuration and builds the kernel tables;
    ``transform`` maps initial conditions (n_samples, n_space**d) to final-time
    fields, path i being driven by the noise seed ``seed_base + i``.
    """

    def __init__(self, alpha=0.5, beta=0.5, kappa0=0.01, d=1, box_length=2.0 * np.pi,
                 n_space=128, n_time=256, t_end=1.0, a=1.0, b=None, c=None, bbar=None,
                 sigma=1.0, cutoff_m="auto", blowup_threshold=BLOWUP_THRESHOLD, seed_base=0):
        self.alpha = alpha
        self.beta = beta
        self.kappa0 = kappa0
        self.d = d
        self.box_length = box_length
        self.n_space = n_space
        self.n_time = n_time
        self.t_end = t_end
        self.a = a
        self.b = b
        self.c = c
        self.bbar = bbar
        self.sigma = sigma
        self.cutoff_m = cutoff_m
        self.blowup_threshold = blowup_threshold
        self.seed_base = seed_base

    def _sigma_spec(self):
        if isinstance(self.sigma, SigmaSpec):
            return self.sigma
        return SigmaSpec("constant", value=float(self.sigma))

    def fit(self, X=None, y=None):
        self.orders_ = FractionalOrders(self.alpha, self.beta, self.kappa0)
        self.grid_ = GridSpec(self.d, self.box_length, self.n_space, self.n_time, self.t_end)
        self.orders_.check_admissible(self.grid_.d)
        self.coeffs_ = CoefficientSet(a=self.a, b=self.b, c=self.c, bbar=self.bbar).validate(self.grid_)
        self.sigma_spec_ = self._sigma_spec()
        self.tables_ = kernel_tables(self.orders_, self.grid_, self.coeffs_.a)
        return self

    def solve(self, u0, seed):
        """Full :class:`SolutionPath` for one initial condition and noise seed."""
        if not hasattr(self, "grid_"):
            self.fit()
        return solve_stfbe(self.grid_, self.orders_, self.coeffs_, self.sigma_spec_, u0,
                           seed=seed, cutoff_m=self.cutoff_m,
                           blowup_threshold=self.blowup_threshold,
                           store_every=self.grid_.n_time, validate=False)

    def transform(self, X):
        if not hasattr(self, "grid_"):
            raise DomainError("call fit before transform")
        X = np.asarray(X, dtype=float)
        size = self.grid_.n_space ** self.grid_.d
        X = X.reshape(-1, size)
        out = np.empty_like(X)
        for i, row in enumerate(X):
            path = self.solve(row.reshape(self.grid_.shape), self.seed_base + i)
            if path.blew_up:
                raise NumericalFailure("path blew up", {"index": i, "time": path.blowup_time})
            out[i] = path.fields[-1].ravel()
        return out
