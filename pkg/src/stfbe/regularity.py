"""Hoelder exponents: closed-form predictions and Monte-Carlo estimates.

Estimates use second moments (variograms): for dyadic lags h the mean squared
increment M(h) is averaged over paths and positions, the median is taken over
probes, and the exponent is half the least-squares slope of log M against
log h.  This measures moment scaling, which coincides with the pathwise
exponent for self-similar-type processes; it is a heuristic otherwise.
"""

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_random_state

from .exceptions import AdmissibilityError, DomainError
from .frac_calculus import FractionalOrders
from .noise import GridSpec
from .solver import CoefficientSet, SigmaSpec, solve_stfbe

__all__ = [
    "ExponentPair",
    "HolderEstimate",
    "HolderExponentEstimator",
    "PathSample",
    "theoretical_exponents",
    "moment_exponents",
    "estimate_holder_time",
    "estimate_holder_space",
    "simulate_samples",
    "regime_scan",
    "fbm_paths",
    "resolve_workers",
    "default_probes",
    "estimate_from_samples",
]

SATURATION = 0.95
ROUGH_FLOOR = 0.05
MIN_PATHS = 16
MIN_TIME_STEPS = 2 ** 10


@dataclass(frozen=True)
class ExponentPair:
    time_exp: float
    space_exp: float
    epsilon: float = 0.0


def theoretical_exponents(orders, d, epsilon=0.0):
    """Maximal time and space Hoelder exponents of the solution.

    space = (2 - c0 - d/2) ^ 1 - eps and
    time = [alpha/2 * ((2 - c0 - d/2) ^ 1) + (2 beta - 1)_- / 2] ^ 1 - eps,
    with c0 taken from ``orders`` (so kappa0 enters exactly at beta = 1/2).
    """
    if epsilon < 0:
        raise DomainError(f"epsilon must be >= 0, got {epsilon}")
    orders.check_admissible(d)
    space_raw = min(2.0 - orders.c0 - d / 2.0, 1.0)
    gain = max(1.0 - 2.0 * orders.beta, 0.0) / 2.0
    time_raw = min(orders.alpha / 2.0 * space_raw + gain, 1.0)
    pair = ExponentPair(time_raw - epsilon, space_raw - epsilon, epsilon)
    if pair.time_exp <= 0 or pair.space_exp <= 0:
        raise AdmissibilityError(
            f"epsilon={epsilon} leaves no positive exponent: {pair}", condition="exponents > 0")
    return pair


def moment_exponents(orders, d=1):
    """Second-moment scaling exponents of the linear additive-noise solution.

    Mode k carries variance ~ |k|^(-2 (2 alpha - 2 beta + 1) / alpha), which
    gives these (time, space) exponents, capped at 1.  They agree with
    :func:`theoretical_exponents` when 2 - c0 - d/2 <= 1 and exceed them
    otherwise, where that formula caps the spatial part before scaling.
    """
    s = (2.0 * orders.alpha - 2.0 * orders.beta + 1.0) / orders.alpha - d / 2.0
    return ExponentPair(min(1.0, orders.alpha * s / 2.0), min(1.0, s))


@dataclass
class HolderEstimate:
    """Estimated exponent with its fit diagnostics."""

    exponent: float
    stderr: float
    fit_range: tuple
    n_paths: int
    axis: str
    lags: np.ndarray = field(repr=False, default=None)
    moments: np.ndarray = field(repr=False, default=None)
    flag: str = "ok"
    intercept: float = float("nan")

    def rows(self):
        """(lag, moment, fit flag) rows for CSV export."""
        return [(float(h), float(m), self.flag) for h, m in zip(self.lags, self.moments)]


class HolderExponentEstimator(BaseEstimator, TransformerMixin):
    """Variogram-slope Hoelder exponent estimator.

    Input ``X`` has shape (n_paths, n_points, n_probes): per path, ``n_probes``
    traces sampled at spacing ``spacing`` (time traces at fixed points, or
    spatial lines at fixed times).  ``transform`` returns per-path mean squared
    increments (n_paths, n_probes, n_lags); ``partial_fit`` accumulates them so
    paths can be streamed, and ``estimate_`` holds the current
    :class:`HolderEstimate`.

    Parameters
    ----------
    axis : {"time", "space"}
        Only sets the defaults: time uses lags in [4 h, n/16], space uses
        periodic lags in [4 h, n/8].
    spacing : float
    lags : sequence of int, optional
        Lags in samples; dyadic defaults otherwise.
    periodic : bool, optional
    n_bootstrap : int
        Path-bootstrap resamples for the standard error.
    """

    def __init__(self, axis="time", spacing=1.0, lags=None, min_lag=4, max_lag_fraction=None,
                 periodic=None, n_bootstrap=200, random_state=0):
        self.axis = axis
        self.spacing = spacing
        self.lags = lags
        self.min_lag = min_lag
        self.max_lag_fraction = max_lag_fraction
        self.periodic = periodic
        self.n_bootstrap = n_bootstrap
        self.random_state = random_state

    def _is_periodic(self):
        return (self.axis == "space") if self.periodic is None else bool(self.periodic)

    def _lags(self, n_points):
        if self.lags is not None:
            lags = np.asarray(sorted(set(int(h) for h in self.lags)))
        else:
            frac = self.max_lag_fraction
            if frac is None:
                frac = 1.0 / 8.0 if self.axis == "space" else 1.0 / 16.0
            span = n_points if self._is_periodic() else n_points - 1
            h_max = int(np.floor(frac * span))
            lags = []
            h = int(self.min_lag)
            while h <= h_max:
                lags.append(h)
                h *= 2
            lags = np.asarray(lags)
        if lags.size < 4:
            raise ValueError(f"need at least 4 dyadic lags, got {lags.tolist()} for {n_points} samples")
        return lags

    def _check_X(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 2:
            X = X[:, :, None]
        if X.ndim != 3:
            raise ValueError(f"X must have shape (n_paths, n_points, n_probes), got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite values; drop blown-up paths first")
        if self.axis not in ("time", "space"):
            raise ValueError(f"axis must be 'time' or 'space', got {self.axis!r}")
        return X

    def transform(self, X):
        X = self._check_X(X)
        lags = self._lags(X.shape[1])
        out = np.empty((X.shape[0], X.shape[2], lags.size))
        for i, h in enumerate(lags):
            if self._is_periodic():
                diff = np.roll(X, -h, axis=1) - X
            else:
                diff = X[:, h:] - X[:, :-h]
            out[:, :, i] = np.mean(diff * diff, axis=1)
        return out

    def partial_fit(self, X, y=None):
        X = self._check_X(X)
        stats = self.transform(X)
        lags = self._lags(X.shape[1])
        if getattr(self, "stats_", None) is None:
            self.stats_ = stats
            self.lags_ = lags
        else:
            if not np.array_equal(lags, self.lags_) or stats.shape[1] != self.stats_.shape[1]:
                raise ValueError("partial_fit batches must share lags and probe count")
            self.stats_ = np.concatenate([self.stats_, stats])
        self.estimate_ = self._estimate()
        return self

    def fit(self, X, y=None):
        self.stats_ = None
        return self.partial_fit(X)

    @staticmethod
    def _slope(log_h, moments):
        if np.any(moments <= 0) or not np.all(np.isfinite(moments)):
            raise DomainError("degenerate increments: a mean squared increment vanishes")
        slope, intercept = np.polyfit(log_h, np.log(moments), 1)
        return slope / 2.0, intercept

    def _moments(self, stats):
        return np.median(stats.mean(axis=0), axis=0)

    def _estimate(self):
        stats = self.stats_
        h = self.lags_ * float(self.spacing)
        log_h = np.log(h)
        moments = self._moments(stats)
        exponent, intercept = self._slope(log_h, moments)
        rng = check_random_state(self.random_state)
        n = stats.shape[0]
        boot = []
        for _ in range(int(self.n_bootstrap)):
            idx = rng.randint(0, n, size=n)
            m = self._moments(stats[idx])
            if np.all(m > 0):
                boot.append(np.polyfit(log_h, np.log(m), 1)[0] / 2.0)
        stderr = float(np.std(boot, ddof=1)) if len(boot) > 1 else float("nan")
        flag = "ok"
        if exponent > SATURATION:
            flag = "smooth-saturated"
        elif exponent < ROUGH_FLOOR:
            flag = "rough-floor"
        return HolderEstimate(exponent=float(exponent), stderr=stderr,
                              fit_range=(float(h[0]), float(h[-1])), n_paths=int(n),
                              axis=self.axis, lags=h, moments=moments, flag=flag,
                              intercept=float(intercept))


# --------------------------------------------------------------------------
# path level helpers

def _usable(paths):
    paths = list(paths)
    if not paths:
        raise ValueError("no paths given")
    ok = [p for p in paths if not p.blew_up]
    if len(ok) < 0.5 * len(paths):
        raise DomainError(f"{len(paths) - len(ok)} of {len(paths)} paths blew up (more than 50%)")
    _warn_small(len(ok), ok[0].grid)
    return ok


def _warn_small(n_paths, grid):
    if n_paths < MIN_PATHS or grid.n_time < MIN_TIME_STEPS:
        warnings.warn(f"{n_paths} paths with n_time={grid.n_time}: exponent estimates need at least "
                      f"{MIN_PATHS} paths and n_time >= {MIN_TIME_STEPS} to be reliable",
                      RuntimeWarning, stacklevel=3)


def _nearest_index(grid, point):
    point = np.atleast_1d(np.asarray(point, dtype=float))
    idx = np.rint(np.mod(point, grid.box_length) / grid.dx).astype(int) % grid.n_space
    return tuple(int(i) for i in idx)


def estimate_holder_time(paths, probe_points, **estimator_params):
    """Time exponent from full-resolution paths at the given spatial points."""
    paths = _usable(paths)
    grid = paths[0].grid
    if paths[0].steps.size != grid.n_time + 1:
        raise ValueError("time estimation needs every step stored (store_every=1)")
    idx = [_nearest_index(grid, x) for x in probe_points]
    X = np.stack([np.stack([p.fields[(slice(None),) + i] for i in idx], axis=-1) for p in paths])
    est = HolderExponentEstimator(axis="time", spacing=grid.dt, **estimator_params)
    return est.fit(X).estimate_


def _space_lines(snapshot):
    """Rows of a 1D field, or all lines along both axes of a 2D field, as (n, probes)."""
    if snapshot.ndim == 1:
        return snapshot[:, None]
    return np.concatenate([snapshot, snapshot.T], axis=1)


def estimate_holder_space(paths, probe_times, **estimator_params):
    """Space exponent from stored fields at the stored steps nearest ``probe_times``."""
    paths = _usable(paths)
    grid = paths[0].grid
    rows = []
    for p in paths:
        times = p.times
        lines = [_space_lines(p.fields[int(np.argmin(np.abs(times - t)))]) for t in probe_times]
        rows.append(np.concatenate(lines, axis=1))
    est = HolderExponentEstimator(axis="space", spacing=grid.dx, **estimator_params)
    return est.fit(np.stack(rows)).estimate_


# --------------------------------------------------------------------------
# Monte Carlo

@dataclass
class PathSample:
    """Reduced output of one path: time traces at probes and spatial snapshots."""

    seed: int
    blew_up: bool
    time_traces: np.ndarray   # (n_time + 1, n_probes)
    snapshots: np.ndarray     # (n_snapshots,) + grid shape
    sup_norm_series: np.ndarray


def resolve_workers(workers=None):
    """Worker count from the argument, else $STFB_WORKERS, else 1."""
    if workers is None:
        workers = os.environ.get("STFB_WORKERS", "1")
    workers = int(workers)
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    return workers


def _one_sample(task):
    grid, orders, coeffs, sigma, u0, seed, cutoff_m, probe_idx, snap_steps = task
    path = solve_stfbe(grid, orders, coeffs, sigma, u0, seed=seed, cutoff_m=cutoff_m,
                       store_every=1, validate=False)
    if path.blew_up:
        empty = np.empty((0, len(probe_idx)))
        return PathSample(seed, True, empty, np.empty((0,) + grid.shape), path.sup_norm_series)
    traces = np.stack([path.fields[(slice(None),) + i] for i in probe_idx], axis=-1)
    snaps = path.fields[np.asarray(snap_steps, dtype=int)]
    return PathSample(seed, False, traces, snaps, path.sup_norm_series)


def simulate_samples(grid, orders, coeffs, sigma, u0, seeds, probe_points, snapshot_times,
                     cutoff_m="auto", workers=None):
    """Simulate one path per seed and keep only what the estimators need.

    Results come back in seed order whatever the worker count, and each path
    is a pure function of its seed, so outputs do not depend on scheduling.
    """
    coeffs.validate(grid)
    orders.check_admissible(grid.d)
    probe_idx = [_nearest_index(grid, x) for x in probe_points]
    snap_steps = [int(np.clip(np.rint(t / grid.dt), 0, grid.n_time)) for t in snapshot_times]
    tasks = [(grid, orders, coeffs, sigma, u0, int(s), cutoff_m, probe_idx, snap_steps)
             for s in seeds]
    workers = resolve_workers(workers)
    if workers == 1:
        return [_one_sample(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_one_sample, tasks))


def _usable_samples(samples):
    ok = [s for s in samples if not s.blew_up]
    if len(ok) < 0.5 * len(samples):
        raise DomainError(f"{len(samples) - len(ok)} of {len(samples)} paths blew up (more than 50%)")
    return ok


def estimate_from_samples(samples, grid, axis, **estimator_params):
    """HolderEstimate along ``axis`` from :class:`PathSample` objects."""
    ok = _usable_samples(samples)
    _warn_small(len(ok), grid)
    if axis == "time":
        X = np.stack([s.time_traces for s in ok])
        spacing = grid.dt
    else:
        X = np.stack([np.concatenate([_space_lines(f) for f in s.snapshots], axis=1) for s in ok])
        spacing = grid.dx
    est = HolderExponentEstimator(axis=axis, spacing=spacing, **estimator_params)
    return est.fit(X).estimate_


def default_probes(grid, n_probes=8):
    """Evenly spread probe points along the box diagonal."""
    s = grid.box_length * (np.arange(n_probes) + 0.5) / n_probes
    return [tuple([v] * grid.d) for v in s]


def regime_scan(alpha, betas, d=1, runs=64, grid=None, seed_base=0, kappa0=0.01, a=1.0,
                sigma=None, n_probes=8, workers=None, epsilon=0.0):
    """Theoretical against estimated time exponents across beta.

    Returns a list of dict rows with keys beta, theory_time, moment_time,
    estimate, stderr, flag.  Every beta uses the same seeds.
    """
    grid = GridSpec(d=d, n_space=256, n_time=4096, t_end=1.0) if grid is None else grid
    sigma = SigmaSpec("constant", value=1.0) if sigma is None else sigma
    coeffs = CoefficientSet(a=a)
    u0 = np.zeros(grid.shape)
    probes = default_probes(grid, n_probes)
    rows = []
    for beta in betas:
        orders = FractionalOrders(alpha, beta, kappa0)
        theory = theoretical_exponents(orders, d, epsilon)
        samples = simulate_samples(grid, orders, coeffs, sigma, u0,
                                   [seed_base + i for i in range(runs)], probes, [],
                                   cutoff_m=None, workers=workers)
        est = estimate_from_samples(samples, grid, "time")
        rows.append({"beta": float(beta), "theory_time": theory.time_exp,
                     "moment_time": moment_exponents(orders, d).time_exp,
                     "estimate": est.exponent, "stderr": est.stderr, "flag": est.flag})
    return rows


# --------------------------------------------------------------------------
# synthetic calibration paths

def fbm_paths(n, hurst, n_paths=1, random_state=None, t_end=1.0):
    """Fractional Brownian motion on n + 1 equispaced points by circulant embedding.

    Returns an array (n_paths, n + 1) starting at 0.
    """
    if not 0 < hurst < 1:
        raise DomainError(f"hurst must lie in (0, 1), got {hurst}")
    rng = check_random_state(random_state)
    k = np.arange(n + 1, dtype=float)
    gamma = 0.5 * (np.abs(k + 1) ** (2 * hurst) - 2 * k ** (2 * hurst) + np.abs(k - 1) ** (2 * hurst))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eig = np.fft.fft(row).real
    if np.any(eig < -1e-10 * eig.max()):
        raise DomainError("circulant embedding is not nonnegative definite")
    eig = np.clip(eig, 0.0, None)
    m = row.size
    z = rng.standard_normal((n_paths, m)) + 1j * rng.standard_normal((n_paths, m))
    incr = np.fft.fft(np.sqrt(eig / m) * z, axis=1)[:, :n].real
    incr *= (t_end / n) ** hurst
    return np.concatenate([np.zeros((n_paths, 1)), np.cumsum(incr, axis=1)], axis=1)
