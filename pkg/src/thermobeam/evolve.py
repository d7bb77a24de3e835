"""Time propagation of ``U' = B U`` with energy monitoring."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from thermobeam.errors import ConfigurationError
from thermobeam.grid import frac_power_apply
from thermobeam.model import Generator, dissipation_form, split_state

METHODS = ("eigen-exact", "implicit-midpoint")
# eigenvector matrices worse than this are treated as defective
MAX_EIGENBASIS_COND = 1e10
UNDERFLOW = 1e-300


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), 6n)
    energies: np.ndarray
    method: str
    warnings: list[str] = field(default_factory=list)


def _energies(gen: Generator, states) -> np.ndarray:
    W = states @ gen.chol.T
    return 0.5 * np.sum(np.abs(W) ** 2, axis=1)


def _eigen_propagator(gen: Generator):
    lam, V = np.linalg.eig(gen.similar)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > MAX_EIGENBASIS_COND:
        return None, cond
    return (lam, V, scipy.linalg.lu_factor(V)), cond


def propagate(gen: Generator, U0, t_end: float, steps: int,
              method: str = "implicit-midpoint") -> Trajectory:
    """Integrate from ``U0`` over ``[0, t_end]`` with ``steps`` uniform steps.

    ``eigen-exact`` evaluates ``exp(tB)`` through the eigenbasis of the
    G-similar matrix; when that basis is numerically defective the run falls
    back to ``implicit-midpoint`` (the Cayley map) and records a warning.
    """
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}; expected one of {METHODS}")
    if int(steps) != steps or steps < 1:
        raise ConfigurationError(f"steps must be a positive integer, got {steps}")
    if not t_end >= 0 or not np.isfinite(t_end):
        raise ConfigurationError(f"t_end must be finite and >= 0, got {t_end}")
    steps = int(steps)
    U0 = np.asarray(U0, dtype=complex)
    if U0.shape != (gen.dim,):
        raise ConfigurationError(f"initial state must have shape ({gen.dim},), got {U0.shape}")

    times = np.linspace(0.0, float(t_end), steps + 1)
    notes = []
    states = None

    if method == "eigen-exact":
        prop, cond = _eigen_propagator(gen)
        if prop is None:
            msg = f"eigenbasis condition number {cond:.3g}; switching to implicit-midpoint"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            notes.append(msg)
            method = "implicit-midpoint"
        else:
            lam, V, Vlu = prop
            c = scipy.linalg.lu_solve(Vlu, gen.chol @ U0)
            W = (np.exp(np.outer(times, lam)) * c) @ V.T
            states = scipy.linalg.solve_triangular(gen.chol, W.T, lower=False).T

    if method == "implicit-midpoint":
        dt = times[1] - times[0]
        eye = np.eye(gen.dim)
        lu = scipy.linalg.lu_factor(eye - 0.5 * dt * gen.B)
        explicit = eye + 0.5 * dt * gen.B
        states = np.empty((steps + 1, gen.dim), dtype=complex)
        states[0] = U0
        for k in range(steps):
            states[k + 1] = scipy.linalg.lu_solve(lu, explicit @ states[k])

    return Trajectory(times=times, states=states, energies=_energies(gen, states),
                      method=method, warnings=notes)


def fit_decay_rate(traj, tail_fraction: float = 0.5) -> float:
    """Exponential rate of the state norm from the tail of an energy trace.

    Half the least-squares slope of ``log E`` over the last ``tail_fraction``
    of the time span (energy is quadratic in the state).
    """
    if isinstance(traj, Trajectory):
        times, energies = traj.times, traj.energies
    else:
        times, energies = traj
    times = np.asarray(times, dtype=float)
    energies = np.asarray(energies, dtype=float)
    if not 0 < tail_fraction <= 1:
        raise ConfigurationError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")
    t0 = times[0] + (1.0 - tail_fraction) * (times[-1] - times[0])
    mask = (times >= t0) & (energies > UNDERFLOW)
    if mask.sum() < 10:
        raise ConfigurationError(f"tail window holds {int(mask.sum())} usable samples, need >= 10")
    slope = np.polyfit(times[mask], np.log(energies[mask]), 1)[0]
    return float(0.5 * slope)


def midpoint_energy_defects(gen: Generator, traj: Trajectory) -> np.ndarray:
    """Per-step ``E_{k+1} - E_k + dt * dissipation(midpoint state)``.

    Zero up to round-off for the implicit-midpoint scheme.
    """
    dt = np.diff(traj.times)
    mids = 0.5 * (traj.states[1:] + traj.states[:-1])
    diss = np.array([dissipation_form(m, gen) for m in mids])
    return np.diff(traj.energies) + dt * diss


def high_frequency_state(gen: Generator, mode: int | None = None) -> np.ndarray:
    """Unit-energy state built from a single sine mode in every block (the top mode by default)."""
    n = gen.n
    k = n if mode is None else int(mode)
    if not 1 <= k <= n:
        raise ConfigurationError(f"mode must lie in 1..{n}, got {k}")
    v = gen.grid.eigbasis[:, k - 1]
    U = np.tile(v, 6).astype(complex)
    return U / gen.norm(U)


def smoothing_profile(gen: Generator, traj: Trajectory) -> np.ndarray:
    """Ratio of the ``A^1/2``-weighted velocity content to the energy norm over time.

    A qualitative indicator: for rough initial data it drops as the damping
    regularizes the solution.
    """
    out = np.empty(len(traj.times))
    for i, U in enumerate(traj.states):
        s = split_state(U, gen.n)
        top = sum(np.linalg.norm(frac_power_apply(gen.grid, 0.5, b)) ** 2
                  for b in (s.Phi, s.Psi, s.Theta))
        nrm = gen.norm(U)
        out[i] = np.sqrt(top) / nrm if nrm > 0 else 0.0
    return out
