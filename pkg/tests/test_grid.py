import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermobeam.errors import ConfigurationError
from thermobeam.grid import (
    build_grid,
    centered_difference,
    frac_power_apply,
    frac_power_matrix,
    laplacian_matrix,
    shear_map,
)


def explicit_tridiagonal(n, h):
    return (2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / h**2


def test_two_point_grid_matches_dense_eigensolver(small_grid):
    w, V = np.linalg.eigh(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    assert small_grid.h == 1.0
    np.testing.assert_allclose(small_grid.eigvals, w, atol=1e-14)
    np.testing.assert_allclose(small_grid.eigvals, [1.0, 3.0], atol=1e-14)
    # columns agree up to sign
    S = small_grid.eigbasis
    for k in range(2):
        assert abs(abs(S[:, k] @ V[:, k]) - 1.0) < 1e-14
    np.testing.assert_allclose(np.abs(S), np.full((2, 2), 1 / np.sqrt(2)), atol=1e-15)


@pytest.mark.parametrize("n, L", [(3, 4.0), (0, 1.0), (1, 1.0), (4, 0.0), (4, -1.0)])
def test_invalid_grids_rejected(n, L):
    with pytest.raises(ConfigurationError):
        build_grid(n, L)


@pytest.mark.parametrize("n", [2, 8, 64, 200])
def test_spectral_data_invariants(n):
    g = build_grid(n, np.pi)
    assert np.all(g.eigvals > 0) and np.all(np.diff(g.eigvals) > 0)
    S = g.eigbasis
    assert np.max(np.abs(S.T @ S - np.eye(n))) < 1e-12
    A = explicit_tridiagonal(n, g.h)
    rebuilt = (S * g.eigvals) @ S.T
    assert np.max(np.abs(rebuilt - A)) / np.max(np.abs(A)) < 1e-10
    np.testing.assert_allclose(laplacian_matrix(g), A, rtol=0, atol=0)
    AS = A @ S
    assert np.max(np.abs(AS - S * g.eigvals)) / g.eigvals.max() < 1e-11


def test_laplacian_unit_spacing():
    np.testing.assert_array_equal(laplacian_matrix(build_grid(2, 3.0)), [[2, -1], [-1, 2]])
    M = laplacian_matrix(build_grid(4, 5.0))
    np.testing.assert_allclose(np.diag(M), 2.0)
    np.testing.assert_allclose(np.diag(M, 1), -1.0)
    np.testing.assert_allclose(np.diag(M, -1), -1.0)


def test_fractional_powers(small_grid):
    np.testing.assert_allclose(frac_power_matrix(small_grid, 0.0), np.eye(2), atol=1e-15)
    R = frac_power_matrix(small_grid, 0.5)
    s3 = np.sqrt(3.0)
    expected = np.array([[1 + s3, 1 - s3], [1 - s3, 1 + s3]]) / 2
    np.testing.assert_allclose(R, expected, atol=1e-14)
    np.testing.assert_allclose(R @ R, [[2, -1], [-1, 2]], atol=1e-13)


def test_first_power_is_laplacian(grid64):
    A = laplacian_matrix(grid64)
    assert np.max(np.abs(frac_power_matrix(grid64, 1.0) - A)) / np.max(np.abs(A)) < 1e-12


def test_fractional_power_is_spd(grid16):
    for nu in (-1.0, -0.3, 0.25, 0.5, 1.0):
        M = frac_power_matrix(grid16, nu)
        np.testing.assert_array_equal(M, M.T)
        assert np.linalg.eigvalsh(M).min() > 0


def test_apply_matches_matrix(grid64):
    rng = np.random.default_rng(1)
    x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    for nu in (-1.0, -0.5, 0.0, 0.3, 0.5, 1.0):
        dense = frac_power_matrix(grid64, nu) @ x
        fast = frac_power_apply(grid64, nu, x)
        assert np.linalg.norm(fast - dense) <= 1e-12 * np.linalg.norm(dense)


def test_apply_examples(grid16):
    rng = np.random.default_rng(2)
    x = rng.standard_normal(16)
    np.testing.assert_allclose(frac_power_apply(grid16, 0.0, x), x, atol=1e-14)
    v = grid16.eigbasis[:, 0]
    np.testing.assert_allclose(frac_power_apply(grid16, 1.0, v), grid16.eigvals[0] * v, atol=1e-13)
    twice = frac_power_apply(grid16, 0.5, frac_power_apply(grid16, 0.5, x))
    Ax = laplacian_matrix(grid16) @ x
    assert np.linalg.norm(twice - Ax) <= 1e-12 * np.linalg.norm(Ax)


def test_apply_rejects_wrong_length(grid16):
    with pytest.raises(ConfigurationError):
        frac_power_apply(grid16, 0.5, np.ones(15))


def test_centered_difference(small_grid, grid64):
    D = centered_difference(small_grid)
    np.testing.assert_array_equal(D, [[0.0, 0.5], [-0.5, 0.0]])
    assert np.linalg.det(D) == pytest.approx(0.25, abs=1e-15)
    D64 = centered_difference(grid64)
    np.testing.assert_array_equal(D64 + D64.T, 0.0)
    assert abs(np.linalg.det(D64 * grid64.h)) > 0


def test_shear_map(small_grid, grid64):
    psi = np.array([0.3, -0.7])
    np.testing.assert_array_equal(shear_map(small_grid, np.zeros(2), psi), psi)
    np.testing.assert_allclose(shear_map(small_grid, np.array([1.0, 0.0]), np.zeros(2)), [0.0, -0.5])
    rng = np.random.default_rng(3)
    phi, psi = rng.standard_normal((2, 64))
    dense = centered_difference(grid64) @ phi + psi
    np.testing.assert_allclose(shear_map(grid64, phi, psi), dense, rtol=1e-14, atol=1e-12)
    with pytest.raises(ConfigurationError):
        shear_map(grid64, phi[:-1], psi)


@settings(max_examples=40, deadline=None)
@given(nu1=st.floats(-1, 1), nu2=st.floats(-1, 1), seed=st.integers(0, 2**32 - 1))
def test_power_law_property(grid64, nu1, nu2, seed):
    x = np.random.default_rng(seed).standard_normal(64)
    lhs = frac_power_apply(grid64, nu1, frac_power_apply(grid64, nu2, x))
    rhs = frac_power_apply(grid64, nu1 + nu2, x)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)


@settings(max_examples=40, deadline=None)
@given(nu2=st.floats(0, 0.99), gap=st.floats(0.01, 1.0), seed=st.integers(0, 2**32 - 1))
def test_embedding_bound(grid16, nu2, gap, seed):
    nu1 = nu2 + gap
    x = np.random.default_rng(seed).standard_normal(16)
    x /= np.linalg.norm(x)
    c = grid16.eigvals.min() ** (nu2 - nu1)
    lo = np.linalg.norm(frac_power_apply(grid16, nu2, x))
    hi = np.linalg.norm(frac_power_apply(grid16, nu1, x))
    assert lo <= c * hi * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_discrete_integration_by_parts(grid64, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 64))
    D = centered_difference(grid64)
    scale = np.linalg.norm(D @ x) * np.linalg.norm(y) + np.linalg.norm(x) * np.linalg.norm(D @ y)
    assert abs((D @ x) @ y + x @ (D @ y)) <= 1e-14 * scale
