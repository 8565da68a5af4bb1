import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from stfbe.exceptions import DomainError
from stfbe.noise import (
    FourierBasis,
    GridSpec,
    covariance_check,
    load_noise,
    sample_noise,
    save_noise,
    standard_normals,
)


@pytest.mark.parametrize("d,n", [(1, 16), (2, 8)])
def test_basis_is_orthonormal(d, n):
    grid = GridSpec(d=d, box_length=3.0, n_space=n, n_time=4)
    basis = FourierBasis(grid)
    assert len(basis) == n ** d
    vals = np.stack([basis.evaluate(i).ravel() for i in range(len(basis))])
    gram = grid.cell_volume * vals @ vals.T
    assert np.allclose(gram, np.eye(len(basis)), atol=1e-12)


def test_basis_ordering_starts_with_constant():
    basis = FourierBasis(GridSpec(n_space=16, n_time=4))
    assert np.all(basis.wavevectors[0] == 0)
    k2 = basis.k_squared()
    assert np.all(np.diff(k2) >= 0)


@pytest.mark.parametrize("d,n", [(1, 32), (2, 16)])
def test_synthesize_project_inverse(d, n):
    grid = GridSpec(d=d, n_space=n, n_time=4)
    basis = FourierBasis(grid)
    rng = np.random.default_rng(0)
    c = rng.normal(size=(3, len(basis)))
    field = basis.synthesize(c)
    assert np.allclose(basis.project(field), c, atol=1e-11)
    direct = sum(c[1, i] * basis.evaluate(i) for i in range(len(basis)))
    assert np.allclose(field[1], direct, atol=1e-11)


def test_sample_noise_is_deterministic():
    grid = GridSpec(n_space=32, n_time=64)
    a = sample_noise(grid, 10, seed=5)
    b = sample_noise(grid, 10, seed=5)
    c = sample_noise(grid, 10, seed=6)
    assert np.array_equal(a.increments, b.increments)
    assert not np.array_equal(a.increments, c.increments)


def test_truncation_is_prefix_of_full_noise():
    grid = GridSpec(n_space=32, n_time=64)
    full = sample_noise(grid, None, seed=3)
    assert np.array_equal(sample_noise(grid, 7, seed=3).increments, full.increments[:, :7])


def test_rows_depend_only_on_time_index():
    z = standard_normals(11, np.arange(50), 8)
    assert np.array_equal(standard_normals(11, [7, 3], 8), z[[7, 3]])
    assert np.array_equal(standard_normals(11, 4, 3), z[4:5, :3])


def test_increments_are_normal_with_variance_dt():
    grid = GridSpec(n_space=256, n_time=4096, t_end=2.0)
    dw = sample_noise(grid, None, seed=1).increments.ravel()
    assert dw.size >= 10 ** 6
    assert abs(dw.mean()) <= 4 * np.sqrt(grid.dt / dw.size)
    assert dw.var() == pytest.approx(grid.dt, rel=0.01)
    assert stats.kstest(dw[:20000] / np.sqrt(grid.dt), "norm").pvalue > 1e-3


def test_covariance_check_within_monte_carlo_error():
    grid = GridSpec(n_space=16, n_time=32)
    t = grid.times[:-1][:, None]
    x = grid.coordinates()[0][None, :]
    h = np.cos(x) * (1 + t)
    g = np.cos(x) + np.sin(2 * x) * t
    reals = [sample_noise(grid, None, seed=s) for s in range(400)]
    dev, err = covariance_check(reals, h, g, return_stderr=True)
    assert abs(dev) < 4 * err
    assert covariance_check(reals, h, g) == dev


def test_covariance_check_errors():
    grid = GridSpec(n_space=16, n_time=8)
    r = sample_noise(grid, None, 0)
    good = np.zeros((8, 16))
    with pytest.raises(ValueError):
        covariance_check([], good, good)
    with pytest.raises(ValueError):
        covariance_check([r], np.zeros((8, 15)), good)
    with pytest.raises(ValueError):
        covariance_check([r, sample_noise(grid, 4, 1)], good, good)


def test_file_round_trip(tmp_path):
    grid = GridSpec(n_space=16, n_time=32)
    r = sample_noise(grid, 9, seed=2 ** 63 + 7)
    path = tmp_path / "w.bin"
    save_noise(path, r)
    back = load_noise(path, grid)
    assert back.seed == r.seed
    assert np.array_equal(back.increments, r.increments)
    assert path.read_bytes()[:4] == b"STFB"


def test_file_corruption(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"XXXX" + bytes(40))
    with pytest.raises(ValueError):
        load_noise(path)
    r = sample_noise(GridSpec(n_space=16, n_time=8), 3, 0)
    save_noise(path, r)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError):
        load_noise(path)


@pytest.mark.parametrize("seed", [-1, 2 ** 64, 1.5])
def test_bad_seed(seed):
    with pytest.raises(ValueError):
        sample_noise(GridSpec(n_space=16, n_time=8), 3, seed)


def test_bad_k_modes():
    with pytest.raises(ValueError):
        sample_noise(GridSpec(n_space=16, n_time=8), 17, 0)


@pytest.mark.parametrize("kw", [{"d": 3}, {"n_space": 100}, {"n_time": 1}, {"box_length": 0.0}])
def test_grid_validation(kw):
    with pytest.raises((DomainError, ValueError)):
        GridSpec(**kw)


@given(k=st.integers(1, 31))
def test_wavenumbers_agree_with_basis(k):
    grid = GridSpec(n_space=32, n_time=4)
    basis = FourierBasis(grid)
    coeffs = np.zeros(len(basis))
    coeffs[k] = 1.0
    spec = basis.to_rfft(coeffs)
    (idx,) = np.nonzero(np.abs(spec) > 0)
    assert grid.k_squared()[idx] == pytest.approx(basis.k_squared()[k])


def test_covariance_check_orthogonal_and_single_mode():
    grid = GridSpec(n_space=16, n_time=32)
    basis = FourierBasis(grid)
    reals = [sample_noise(grid, None, seed=s) for s in range(1000)]
    ones = np.ones((grid.n_time, 1))
    h = ones * basis.evaluate(1)[None, :]
    g = ones * basis.evaluate(4)[None, :]
    dev, err = covariance_check(reals, h, g, return_stderr=True)
    assert abs(dev) <= 4 * err
    # h = g = 1_[0,T] eta^1: the inner product is T and the deviation is pure MC noise
    dev, err = covariance_check(reals, h, h, return_stderr=True)
    assert grid.dt * grid.cell_volume * np.sum(h * h) == pytest.approx(grid.t_end)
    assert abs(dev) <= 4 * err
