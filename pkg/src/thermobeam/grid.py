"""Uniform finite-difference grid for A = -d^2/dx^2 with Dirichlet ends.

The three-point Laplacian on ``n`` interior nodes is diagonalized by the
discrete sine basis, so every power ``A**nu`` is available exactly through
spectral synthesis.  First derivatives use the centered stencil, which is
skew-symmetric; that property is what keeps the assembled generators exactly
dissipative in their energy norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from thermobeam.errors import ConfigurationError


@dataclass(frozen=True, eq=False)
class Discretization:
    """Interior grid of (0, L) with the sine eigen-decomposition of A.

    Attributes:
        n: number of interior nodes (even, >= 2).
        L: interval length.
        h: mesh width ``L / (n + 1)``.
        eigvals: ascending eigenvalues of the discrete Laplacian.
        eigbasis: orthonormal sine eigenvectors, one per column.
    """

    n: int
    L: float
    h: float
    eigvals: np.ndarray
    eigbasis: np.ndarray


def build_grid(n: int, L: float) -> Discretization:
    """Build the interior grid and its closed-form spectral data.

    Odd ``n`` is rejected: the centered difference matrix is skew-symmetric,
    and a skew matrix of odd order is singular.
    """
    if isinstance(n, bool) or int(n) != n:
        raise ConfigurationError(f"n must be an integer, got {n!r}")
    n = int(n)
    if n < 2 or n % 2:
        raise ConfigurationError(f"n must be even and >= 2, got {n}")
    L = float(L)
    if not np.isfinite(L) or L <= 0:
        raise ConfigurationError(f"L must be a positive length, got {L}")

    h = L / (n + 1)
    k = np.arange(1, n + 1)
    eigvals = (4.0 / h**2) * np.sin(k * np.pi / (2 * (n + 1))) ** 2
    eigbasis = np.sqrt(2.0 / (n + 1)) * np.sin(np.outer(k, k) * np.pi / (n + 1))
    eigvals.setflags(write=False)
    eigbasis.setflags(write=False)
    return Discretization(n=n, L=L, h=h, eigvals=eigvals, eigbasis=eigbasis)


def laplacian_matrix(grid: Discretization) -> np.ndarray:
    """Tridiagonal stencil (-1, 2, -1) / h^2."""
    n, h2 = grid.n, grid.h**2
    off = np.full(n - 1, -1.0 / h2)
    return np.diag(np.full(n, 2.0 / h2)) + np.diag(off, 1) + np.diag(off, -1)


def frac_power_matrix(grid: Discretization, nu: float) -> np.ndarray:
    """Dense ``A**nu`` by spectral synthesis ``S diag(eigvals**nu) S^T``."""
    S = grid.eigbasis
    M = (S * grid.eigvals ** float(nu)) @ S.T
    # symmetrize away round-off so downstream Cholesky/eigh see an exact SPD
    return 0.5 * (M + M.T)


def _sine(x: np.ndarray) -> np.ndarray:
    # orthonormal DST-I is exactly multiplication by the (symmetric) eigbasis
    return scipy.fft.dst(x, type=1, norm="ortho", axis=0)


def frac_power_apply(grid: Discretization, nu: float, x) -> np.ndarray:
    """Apply ``A**nu`` to a vector (or to the columns of a matrix) via DST-I."""
    x = np.asarray(x)
    if x.ndim == 0 or x.shape[0] != grid.n:
        raise ConfigurationError(
            f"expected leading dimension {grid.n}, got shape {x.shape}"
        )
    scale = grid.eigvals ** float(nu)
    if x.ndim > 1:
        scale = scale.reshape((-1,) + (1,) * (x.ndim - 1))
    return _sine(scale * _sine(x))


def sine_coefficients(grid: Discretization, x) -> np.ndarray:
    """Coordinates of ``x`` in the sine eigenbasis."""
    return _sine(np.asarray(x))


def centered_difference(grid: Discretization) -> np.ndarray:
    """Skew-symmetric first-derivative stencil with zero Dirichlet ends."""
    n = grid.n
    if n % 2:
        raise ConfigurationError("centered difference is singular for odd n")
    c = 1.0 / (2.0 * grid.h)
    return np.diag(np.full(n - 1, c), 1) + np.diag(np.full(n - 1, -c), -1)


def shear_map(grid: Discretization, phi, psi) -> np.ndarray:
    """Discrete shear strain ``phi_x + psi``."""
    phi = np.asarray(phi)
    psi = np.asarray(psi)
    if phi.shape != (grid.n,) or psi.shape != (grid.n,):
        raise ConfigurationError(
            f"phi and psi must have shape ({grid.n},), got {phi.shape} and {psi.shape}"
        )
    # stencil applied directly: (D0 phi)_j = (phi_{j+1} - phi_{j-1}) / 2h
    padded = np.concatenate(([0.0], phi, [0.0]))
    return (padded[2:] - padded[:-2]) / (2.0 * grid.h) + psi
