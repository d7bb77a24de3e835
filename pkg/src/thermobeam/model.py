"""Physical parameters, energy weights and block generators.

State vectors are flat arrays of length ``6n`` stacked as
``(phi, Phi, psi, Psi, theta, Theta)`` where the capitalized blocks are the
time derivatives of the lower-case ones.  The energy inner product is
``<U, V>_G = V^H G U`` with ``G = L^T W L``; ``L`` maps a state to its energy
coordinates ``(Phi, Psi, D0 phi + psi, A^1/2 psi, A^1/2 theta, Theta)`` and
``W`` is diagonal in the six weights.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.linalg

from thermobeam.errors import ConfigurationError
from thermobeam.grid import (
    Discretization,
    centered_difference,
    frac_power_apply,
    frac_power_matrix,
    laplacian_matrix,
    sine_coefficients,
)

BLOCK_NAMES = ("phi", "Phi", "psi", "Psi", "theta", "Theta")


class SystemId(enum.Enum):
    SYSTEM1 = 1
    SYSTEM2 = 2

    @classmethod
    def parse(cls, value) -> "SystemId":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("system", "")
        if key in ("1", "2"):
            return cls(int(key))
        raise ConfigurationError(f"unknown system {value!r}; expected 1 or 2")


_DAMPING_FIELDS = ("mu1", "mu2", "bigK", "gamma")


@dataclass(frozen=True)
class ModelParams:
    """Constants of the two beam models and the damping exponents.

    ``beta`` and ``gamma`` couple the first system, ``mu`` the second.  The
    damping coefficients ``mu1``, ``mu2``, ``bigK`` (first system) and
    ``gamma`` (second system) may be zero to express the undamped limit; all
    other constants must be strictly positive.
    """

    rho1: float = 1.0
    rho2: float = 1.0
    rho3: float = 1.0
    kappa: float = 1.0
    b: float = 1.0
    delta: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    mu: float = 1.0
    mu1: float = 1.0
    mu2: float = 1.0
    bigK: float = 1.0
    tau: float = 1.0
    sigma: float = 1.0
    xi: float = 1.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise ConfigurationError(f"{f.name} must be a real number, got {value!r}")
            value = float(value)
            if not np.isfinite(value):
                raise ConfigurationError(f"{f.name} must be finite, got {value}")
            object.__setattr__(self, f.name, value)
            if f.name in ("tau", "sigma", "xi"):
                if not 0.0 <= value <= 1.0:
                    raise ConfigurationError(f"{f.name} must lie in [0, 1], got {value}")
            elif f.name in _DAMPING_FIELDS:
                if value < 0:
                    raise ConfigurationError(f"{f.name} must be >= 0, got {value}")
            elif value <= 0:
                raise ConfigurationError(f"{f.name} must be > 0, got {value}")

    @property
    def exponents(self) -> tuple[float, float, float]:
        return (self.tau, self.sigma, self.xi)

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def undamped(self, system: SystemId) -> "ModelParams":
        """Same constants with every damping coefficient of ``system`` set to zero."""
        system = SystemId.parse(system)
        if system is SystemId.SYSTEM1:
            return self.replace(mu1=0.0, mu2=0.0, bigK=0.0)
        return self.replace(mu1=0.0, mu2=0.0, gamma=0.0)


class WeightSet(NamedTuple):
    """Energy-norm coefficients of the six energy coordinates."""

    wPhi: float
    wPsi: float
    wShear: float
    wBend: float
    wTheta_grad: float
    wTheta_vel: float


class StateBlocks(NamedTuple):
    phi: np.ndarray
    Phi: np.ndarray
    psi: np.ndarray
    Psi: np.ndarray
    theta: np.ndarray
    Theta: np.ndarray


def split_state(U, n: int) -> StateBlocks:
    U = np.asarray(U)
    if U.shape[0] != 6 * n:
        raise ConfigurationError(f"state must have length {6 * n}, got {U.shape[0]}")
    return StateBlocks(*(U[k * n:(k + 1) * n] for k in range(6)))


def stack_state(blocks) -> np.ndarray:
    return np.concatenate([np.asarray(b) for b in blocks])


def derive_weights(params: ModelParams, system: SystemId) -> WeightSet:
    """Weights under which the discrete generator is exactly dissipative.

    For the second system these are the physical constants.  For the first,
    the cross terms cancel only if

        wShear = wPhi*kappa/rho1 = wPsi*kappa/rho2,   wBend = wPsi*b/rho2,
        wPsi*beta/rho2 = wTheta_vel*gamma/rho3,       wTheta_grad = wTheta_vel*delta/rho3,

    which fixes the set up to scale; the scale is pinned by wPhi = rho1*beta*gamma.
    """
    p = params
    system = SystemId.parse(system)
    if system is SystemId.SYSTEM2:
        return WeightSet(p.rho1, p.rho2, p.kappa, p.b, p.delta, p.rho3)
    if p.gamma <= 0:
        raise ConfigurationError("system 1 requires gamma > 0 (it scales the energy norm)")
    bg = p.beta * p.gamma
    return WeightSet(
        wPhi=p.rho1 * bg,
        wPsi=p.rho2 * bg,
        wShear=p.kappa * bg,
        wBend=p.b * bg,
        wTheta_grad=p.beta**2 * p.delta,
        wTheta_vel=p.beta**2 * p.rho3,
    )


def paper_weights(params: ModelParams, system: SystemId) -> WeightSet:
    """Energy coefficients in their literal textbook form for each model.

    These differ from :func:`derive_weights` for the first system unless
    ``beta == kappa`` and ``beta*rho3 == kappa*K``; they are used only to
    evaluate the frequency-domain inequalities with their literal constants.
    """
    p = params
    system = SystemId.parse(system)
    if system is SystemId.SYSTEM2:
        return derive_weights(p, system)
    return WeightSet(
        wPhi=p.rho1 * p.beta * p.gamma,
        wPsi=p.rho2 * p.kappa * p.gamma,
        wShear=p.beta * p.kappa * p.gamma,
        wBend=p.b * p.kappa * p.gamma,
        wTheta_grad=p.beta * p.delta * p.kappa,
        wTheta_vel=p.beta * p.kappa * p.bigK,
    )


def energy_map(grid: Discretization) -> np.ndarray:
    """Matrix taking a state to its six stacked energy coordinates."""
    n = grid.n
    I = np.eye(n)
    D0 = centered_difference(grid)
    R = frac_power_matrix(grid, 0.5)
    Lm = np.zeros((6 * n, 6 * n))

    def put(row, col, M):
        Lm[row * n:(row + 1) * n, col * n:(col + 1) * n] = M

    put(0, 1, I)   # Phi
    put(1, 3, I)   # Psi
    put(2, 0, D0)  # shear: D0 phi + psi
    put(2, 2, I)
    put(3, 2, R)   # A^1/2 psi
    put(4, 4, R)   # A^1/2 theta
    put(5, 5, I)   # Theta
    return Lm


def energy_coordinates(grid: Discretization, U) -> list[np.ndarray]:
    """``(Phi, Psi, D0 phi + psi, A^1/2 psi, A^1/2 theta, Theta)`` for a state."""
    s = split_state(U, grid.n)
    D0 = centered_difference(grid)
    return [
        s.Phi,
        s.Psi,
        D0 @ s.phi + s.psi,
        frac_power_apply(grid, 0.5, s.psi),
        frac_power_apply(grid, 0.5, s.theta),
        s.Theta,
    ]


def weighted_norm(grid: Discretization, U, weights) -> float:
    """Energy norm of ``U`` for an arbitrary weight set, without forming G."""
    coords = energy_coordinates(grid, U)
    total = sum(w * np.vdot(c, c).real for w, c in zip(weights, coords))
    return float(np.sqrt(total))


def gram_matrix(params: ModelParams, weights: WeightSet, grid: Discretization):
    """Energy Gram matrix ``G = L^T W L`` and its upper Cholesky factor.

    Raises:
        ConfigurationError: if G is not positive definite.
    """
    n = grid.n
    Lm = energy_map(grid)
    w = np.repeat(np.asarray(weights, dtype=float), n)
    if np.any(w <= 0):
        raise ConfigurationError(f"energy weights must be positive, got {tuple(weights)}")
    G = Lm.T @ (w[:, None] * Lm)
    G = 0.5 * (G + G.T)
    try:
        chol = scipy.linalg.cholesky(G, lower=False)
    except np.linalg.LinAlgError as exc:
        raise ConfigurationError(f"energy Gram matrix is not SPD: {exc}") from exc
    return G, chol


@dataclass(frozen=True, eq=False)
class Generator:
    """Real ``6n x 6n`` generator together with its energy geometry."""

    B: np.ndarray
    G: np.ndarray
    chol: np.ndarray
    params: ModelParams
    system: SystemId
    grid: Discretization
    weights: WeightSet

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def dim(self) -> int:
        return 6 * self.grid.n

    @property
    def damping_coefficient(self) -> float:
        """Coefficient of the thermal damping term (K or gamma)."""
        p = self.params
        return p.bigK if self.system is SystemId.SYSTEM1 else p.gamma

    @property
    def is_damped(self) -> bool:
        p = self.params
        return max(p.mu1, p.mu2, self.damping_coefficient) > 0

    @cached_property
    def similar(self) -> np.ndarray:
        """``C B C^-1`` with ``C^T C = G``: B expressed in G-orthonormal coordinates."""
        CB = self.chol @ self.B
        # X C = CB  <=>  C^T X^T = (CB)^T
        Xt = scipy.linalg.solve_triangular(self.chol, CB.T, trans="T", lower=False)
        return np.ascontiguousarray(Xt.T)

    @cached_property
    def damping_matrix(self) -> np.ndarray:
        """Symmetric PSD matrix of :func:`dissipation_form`."""
        n, p, w = self.n, self.params, self.weights
        M = np.zeros((6 * n, 6 * n))
        M[n:2 * n, n:2 * n] = w.wPhi * p.mu1 / p.rho1 * frac_power_matrix(self.grid, p.tau)
        M[3 * n:4 * n, 3 * n:4 * n] = w.wPsi * p.mu2 / p.rho2 * frac_power_matrix(self.grid, p.sigma)
        M[5 * n:, 5 * n:] = (
            w.wTheta_vel * self.damping_coefficient / p.rho3 * frac_power_matrix(self.grid, p.xi)
        )
        return M

    def inner(self, U, V) -> complex:
        """``<U, V>_G = V^H G U``."""
        return complex(np.vdot(V, self.G @ U))

    def norm(self, U) -> float:
        return float(np.linalg.norm(self.chol @ U))


def assemble_generator(params: ModelParams, grid: Discretization, system: SystemId) -> Generator:
    """Assemble the block generator of either model on ``grid``."""
    system = SystemId.parse(system)
    p = params
    n = grid.n
    I = np.eye(n)
    A = laplacian_matrix(grid)
    D0 = centered_difference(grid)
    B = np.zeros((6 * n, 6 * n))

    def put(row, col, M):
        B[row * n:(row + 1) * n, col * n:(col + 1) * n] += M

    put(0, 1, I)
    put(2, 3, I)
    put(4, 5, I)

    # Phi' = (kappa/rho1) D0 (D0 phi + psi) - (mu1/rho1) A^tau Phi
    put(1, 0, p.kappa / p.rho1 * (D0 @ D0))
    put(1, 2, p.kappa / p.rho1 * D0)
    put(1, 1, -p.mu1 / p.rho1 * frac_power_matrix(grid, p.tau))
    # Psi' = -(b/rho2) A psi - (kappa/rho2)(D0 phi + psi) - (mu2/rho2) A^sigma Psi
    put(3, 2, -p.b / p.rho2 * A - p.kappa / p.rho2 * I)
    put(3, 0, -p.kappa / p.rho2 * D0)
    put(3, 3, -p.mu2 / p.rho2 * frac_power_matrix(grid, p.sigma))
    # Theta' = -(delta/rho3) A theta - ...
    put(5, 4, -p.delta / p.rho3 * A)

    if system is SystemId.SYSTEM1:
        put(3, 5, -p.beta / p.rho2 * D0)
        put(5, 3, -p.gamma / p.rho3 * D0)
        put(5, 5, -p.bigK / p.rho3 * frac_power_matrix(grid, p.xi))
    else:
        put(1, 5, -p.mu / p.rho1 * D0)
        put(3, 5, p.mu / p.rho2 * I)
        put(5, 1, -p.mu / p.rho3 * D0)
        put(5, 3, -p.mu / p.rho3 * I)
        put(5, 5, -p.gamma / p.rho3 * frac_power_matrix(grid, p.xi))

    weights = derive_weights(p, system)
    G, chol = gram_matrix(p, weights, grid)
    B.setflags(write=False)
    G.setflags(write=False)
    chol.setflags(write=False)
    return Generator(B=B, G=G, chol=chol, params=p, system=system, grid=grid, weights=weights)


def _power_norm_sq(grid: Discretization, nu: float, x) -> float:
    # ||A^{nu/2} x||^2 = sum_k eigval_k^nu |c_k|^2 in sine coordinates
    c = sine_coefficients(grid, x)
    return float(np.sum(grid.eigvals**nu * np.abs(c) ** 2))


def dissipation_form(U, gen: Generator) -> float:
    """Damping rate ``-Re<BU, U>_G`` evaluated from the damping terms alone."""
    U = np.asarray(U)
    if U.shape != (gen.dim,):
        raise ConfigurationError(f"state must have shape ({gen.dim},), got {U.shape}")
    p, w, grid = gen.params, gen.weights, gen.grid
    s = split_state(U, gen.n)
    return (
        w.wPhi * p.mu1 / p.rho1 * _power_norm_sq(grid, p.tau, s.Phi)
        + w.wPsi * p.mu2 / p.rho2 * _power_norm_sq(grid, p.sigma, s.Psi)
        + w.wTheta_vel * gen.damping_coefficient / p.rho3 * _power_norm_sq(grid, p.xi, s.Theta)
    )


def energy(U, gen: Generator) -> float:
    """``0.5 * <U, U>_G``."""
    U = np.asarray(U)
    if U.shape != (gen.dim,):
        raise ConfigurationError(f"state must have shape ({gen.dim},), got {U.shape}")
    return 0.5 * float(np.linalg.norm(gen.chol @ U) ** 2)


def random_state(gen: Generator, seed) -> np.ndarray:
    """Reproducible complex state of unit energy norm."""
    rng = np.random.default_rng(seed)
    U = rng.standard_normal(gen.dim) + 1j * rng.standard_normal(gen.dim)
    return U / gen.norm(U)
