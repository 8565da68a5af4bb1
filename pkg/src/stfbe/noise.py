"""Truncated cylindrical Wiener process on a periodic box.

The noise is W_t = sum_k eta^k w^k_t with {eta^k} the real orthonormal Fourier
basis of L2 on [0, L)^d and w^k independent Brownian motions.  Increments are
drawn from a counter-based generator so that increment (n, k) depends only on
(seed, n, k).
"""

import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import ndtri

from ._validation import check_power_of_two, check_scalar
from .exceptions import DomainError

__all__ = [
    "GridSpec",
    "FourierBasis",
    "NoiseRealization",
    "sample_noise",
    "standard_normals",
    "covariance_check",
    "save_noise",
    "load_noise",
]

MAGIC = b"STFB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQII")


@dataclass(frozen=True)
class GridSpec:
    """Periodic spatial grid in d = 1 or 2 dimensions plus a uniform time grid."""

    d: int = 1
    box_length: float = 2.0 * np.pi
    n_space: int = 256
    n_time: int = 1024
    t_end: float = 1.0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise DomainError(f"d must be 1 or 2, got {self.d}")
        check_scalar(self.box_length, "box_length", lower=0.0, lower_inclusive=False)
        check_power_of_two(self.n_space, "n_space")
        if int(self.n_time) != self.n_time or self.n_time < 2:
            raise ValueError(f"n_time must be an integer >= 2, got {self.n_time!r}")
        check_scalar(self.t_end, "t_end", lower=0.0, lower_inclusive=False)

    @property
    def dt(self):
        return self.t_end / self.n_time

    @property
    def dx(self):
        return self.box_length / self.n_space

    @property
    def shape(self):
        return (self.n_space,) * self.d

    @property
    def volume(self):
        return self.box_length ** self.d

    @property
    def cell_volume(self):
        return self.dx ** self.d

    @property
    def times(self):
        return self.dt * np.arange(self.n_time + 1)

    def coordinates(self):
        """Grid coordinates, one array per axis (``indexing="ij"``)."""
        x = self.dx * np.arange(self.n_space)
        return np.meshgrid(*([x] * self.d), indexing="ij")

    def rfft_shape(self):
        return self.shape[:-1] + (self.n_space // 2 + 1,)

    def wavenumbers(self):
        """Wavevector components on the rfft half-spectrum, one array per axis."""
        n = self.n_space
        scale = 2.0 * np.pi / self.box_length
        full = scale * np.fft.fftfreq(n, d=1.0 / n)
        half = scale * np.arange(n // 2 + 1)
        axes = [full] * (self.d - 1) + [half]
        return np.meshgrid(*axes, indexing="ij")

    def k_squared(self):
        """|k|^2 on the rfft half-spectrum."""
        return sum(k * k for k in self.wavenumbers())


class FourierBasis:
    """Real orthonormal Fourier basis of L2 on the box, as seen on the grid.

    Ordered by |m|^2 (integer wavevector m, k = 2 pi m / L), then
    lexicographically in m, cosine before sine.  Self-conjugate wavevectors
    (every component 0 or n/2) carry only a cosine; the remaining ones come
    in +-m pairs represented once, so the grid holds exactly n^d functions.
    """

    def __init__(self, grid):
        self.grid = grid
        n = grid.n_space
        comps = np.arange(-(n // 2) + 1, n // 2 + 1)
        mesh = np.meshgrid(*([comps] * grid.d), indexing="ij")
        m = np.stack([c.ravel() for c in mesh], axis=1)
        partner = -m
        partner[partner == -(n // 2)] = n // 2
        self_conj = np.all(m == partner, axis=1)
        rep = self_conj | np.array([tuple(a) > tuple(b) for a, b in zip(m, partner)])
        m = m[rep]
        self_conj = self_conj[rep]
        entries = []
        for vec, sc in zip(m, self_conj):
            key = (int(np.dot(vec, vec)), tuple(int(v) for v in vec))
            entries.append((key, 0, vec))
            if not sc:
                entries.append((key, 1, vec))
        entries.sort(key=lambda e: (e[0], e[1]))
        self.wavevectors = np.array([e[2] for e in entries], dtype=np.int64)
        self.kinds = np.array([e[1] for e in entries], dtype=np.int8)  # 0 cos, 1 sin
        self.self_conjugate = np.array(
            [np.all((np.abs(v) == 0) | (np.abs(v) == n // 2)) for v in self.wavevectors])

    def __len__(self):
        return len(self.kinds)

    def k_squared(self):
        scale = 2.0 * np.pi / self.grid.box_length
        return scale ** 2 * np.sum(self.wavevectors.astype(float) ** 2, axis=1)

    def evaluate(self, index):
        """Values of eta^index on the grid."""
        g = self.grid
        k = 2.0 * np.pi / g.box_length * self.wavevectors[index]
        phase = sum(kc * xc for kc, xc in zip(k, g.coordinates()))
        if self.self_conjugate[index]:
            return np.cos(phase) / np.sqrt(g.volume)
        trig = np.cos if self.kinds[index] == 0 else np.sin
        return np.sqrt(2.0 / g.volume) * trig(phase)

    @cached_property
    def _rfft_map(self):
        """Gather plan from the first K basis coefficients into the rfft half-spectrum."""
        g = self.grid
        n = g.n_space
        half_shape = g.rfft_shape()
        cos_src = np.full(half_shape, -1, dtype=np.int64)
        sin_src = np.full(half_shape, -1, dtype=np.int64)
        sin_sign = np.zeros(half_shape)
        for idx, (vec, kind) in enumerate(zip(self.wavevectors, self.kinds)):
            for sign in (1, -1):
                v = (sign * vec) % n
                if v[-1] > n // 2:
                    continue
                target = tuple(v)
                if kind == 0:
                    cos_src[target] = idx
                else:
                    sin_src[target] = idx
                    # c_m = (A - iB)/sqrt(2V) at the representative, conjugate at -m
                    sin_sign[target] = -sign
        return cos_src, sin_src, sin_sign

    def to_rfft(self, coeffs):
        """Map basis coefficients (..., K) to the unnormalised rfft spectrum of the field.

        ``np.fft.irfftn(out, s=grid.shape)`` then gives the grid values.  Only the
        first ``coeffs.shape[-1]`` basis functions are used (truncation).
        """
        g = self.grid
        coeffs = np.asarray(coeffs, dtype=float)
        k_used = coeffs.shape[-1]
        cos_src, sin_src, sin_sign = self._rfft_map
        lead = coeffs.shape[:-1]
        out = np.zeros(lead + g.rfft_shape(), dtype=complex)
        n_total = g.n_space ** g.d
        pair_scale = n_total / np.sqrt(2.0 * g.volume)
        use_c = (cos_src >= 0) & (cos_src < k_used)
        sc = self.self_conjugate[np.clip(cos_src, 0, None)]
        scale_c = np.where(sc, n_total / np.sqrt(g.volume), pair_scale)
        out[..., use_c] = coeffs[..., cos_src[use_c]] * scale_c[use_c]
        use_s = (sin_src >= 0) & (sin_src < k_used)
        out[..., use_s] += 1j * sin_sign[use_s] * pair_scale * coeffs[..., sin_src[use_s]]
        return out

    def synthesize(self, coeffs):
        """Grid values of sum_k coeffs[..., k] eta^k."""
        return np.fft.irfftn(self.to_rfft(coeffs), s=self.grid.shape,
                             axes=tuple(range(-self.grid.d, 0)))

    def project(self, values, k_modes=None):
        """<values, eta^k> by grid quadrature for the first ``k_modes`` basis functions."""
        g = self.grid
        k_modes = len(self) if k_modes is None else int(k_modes)
        values = np.asarray(values, dtype=float)
        spec = np.fft.rfftn(values, axes=tuple(range(-g.d, 0))) * g.cell_volume
        cos_src, sin_src, sin_sign = self._rfft_map
        out = np.zeros(values.shape[:-g.d] + (len(self),))
        pair_scale = np.sqrt(2.0 / g.volume)
        use_c = cos_src >= 0
        idx = cos_src[use_c]
        sc = self.self_conjugate[idx]
        out[..., idx] = spec[..., use_c].real * np.where(sc, 1.0 / np.sqrt(g.volume), pair_scale)
        use_s = sin_src >= 0
        # sum h sin(k x) = -Im H[k] at the representative, +Im H at its partner
        out[..., sin_src[use_s]] = pair_scale * sin_sign[use_s] * spec[..., use_s].imag
        return out[..., :k_modes]


@dataclass(frozen=True)
class NoiseRealization:
    """Per-mode Brownian increments, shape (n_time, K), each N(0, dt)."""

    seed: int
    increments: np.ndarray = field(repr=False)
    grid: GridSpec = None

    @property
    def k_modes(self):
        return self.increments.shape[1]

    @property
    def n_time(self):
        return self.increments.shape[0]


def _check_seed(seed):
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= int(seed) < 2 ** 64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def standard_normals(seed, rows, n_cols):
    """N(0, 1) draws whose entry (n, k) depends only on (seed, n, k).

    Row n is the stream of a Philox4x64 generator keyed by ``seed`` with
    counter (0, n, 0, 0); uniforms use the top 53 bits of each raw word and are
    mapped through the inverse normal CDF.
    """
    seed = _check_seed(seed)
    rows = np.atleast_1d(np.asarray(rows, dtype=np.uint64))
    out = np.empty((rows.size, n_cols))
    for i, n in enumerate(rows):
        bitgen = np.random.Philox(key=seed, counter=[0, int(n), 0, 0])
        raw = bitgen.random_raw(n_cols)
        out[i] = ndtri(((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0 ** -53)
    return out


def sample_noise(grid, k_modes=None, seed=0):
    """Draw the increments of the first ``k_modes`` mode Brownian motions.

    ``k_modes`` defaults to full truncation n_space**d.
    """
    k_total = grid.n_space ** grid.d
    k_modes = k_total if k_modes is None else int(k_modes)
    if not 1 <= k_modes <= k_total:
        raise ValueError(f"k_modes must be in [1, {k_total}], got {k_modes}")
    z = standard_normals(seed, np.arange(grid.n_time), k_modes)
    z *= np.sqrt(grid.dt)
    return NoiseRealization(seed=_check_seed(seed), increments=z, grid=grid)


def covariance_check(realizations, h, g, return_stderr=False):
    """Empirical E[W(h) W(g)] minus the space-time inner product of h and g.

    Parameters
    ----------
    realizations : sequence of NoiseRealization
        All on the same grid and truncation.
    h, g : ndarray
        Test functions sampled at (t_n, x), shape (n_time,) + grid.shape.
    return_stderr : bool
        Also return the Monte-Carlo standard error of the empirical mean.

    Returns
    -------
    float or (float, float)
    """
    realizations = list(realizations)
    if not realizations:
        raise ValueError("need at least one realization")
    grid = realizations[0].grid
    if grid is None:
        raise ValueError("realizations must carry their GridSpec")
    expected = (grid.n_time,) + grid.shape
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    if h.shape != expected or g.shape != expected:
        raise ValueError(f"test functions must have shape {expected}, got {h.shape} and {g.shape}")
    shapes = {r.increments.shape for r in realizations}
    if len(shapes) != 1 or any(r.grid != grid for r in realizations):
        raise ValueError("realizations have mismatched grids or truncations")
    k_modes = realizations[0].k_modes
    basis = FourierBasis(grid)
    hk = basis.project(h, k_modes)
    gk = basis.project(g, k_modes)
    dw = np.stack([r.increments for r in realizations])
    wh = np.einsum("rnk,nk->r", dw, hk)
    wg = np.einsum("rnk,nk->r", dw, gk)
    inner = grid.dt * grid.cell_volume * float(np.sum(h * g))
    deviation = float(np.mean(wh * wg)) - inner
    if not return_stderr:
        return deviation
    hh = grid.dt * grid.cell_volume * float(np.sum(h * h))
    gg = grid.dt * grid.cell_volume * float(np.sum(g * g))
    # Var(XY) = Var X Var Y + Cov(X, Y)^2 for centred jointly Gaussian X, Y
    stderr = float(np.sqrt((hh * gg + inner ** 2) / len(realizations)))
    return deviation, stderr


def save_noise(path, realization):
    """Write a realization as header + little-endian f64 increments (row-major)."""
    inc = np.ascontiguousarray(realization.increments, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, realization.seed, inc.shape[0], inc.shape[1]))
        fh.write(inc.tobytes())


def load_noise(path, grid=None):
    """Read a file written by :func:`save_noise`."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError("truncated noise file header")
        magic, version, seed, n_time, k_modes = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported noise file version {version}")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n_time * k_modes:
        raise ValueError("noise file payload does not match its header")
    return NoiseRealization(seed=seed, increments=data.reshape(n_time, k_modes).astype(float),
                            grid=grid)
