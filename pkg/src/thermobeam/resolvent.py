"""Resolvent solves and energy-norm resolvent estimates along the imaginary axis.

The operator norm of ``(i lam - B)^-1`` in the energy norm is
``1 / sigma_min(C (i lam - B) C^-1)`` with ``C`` the Cholesky factor of G.
Scans sample that quantity on a log-spaced frequency grid and fit a decay
exponent ``eta`` from ``||R(i lam)|| ~ lam^-eta``.  The frequency-domain
inequalities behind the regularity estimates are evaluated as bounded ratios
(see :func:`lemma_probe`).
"""

from __future__ import annotations

import enum
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from thermobeam.errors import ConfigurationError, SingularSystemError
from thermobeam.grid import centered_difference, frac_power_apply
from thermobeam.model import Generator, SystemId, paper_weights, split_state, weighted_norm
from thermobeam.spectrum import lambda_max_resolved

DENSE_SVD_MAX_DIM = 1500
FIT_DECADES = 1.5
MIN_FIT_POINTS = 6
RECOMMENDED_FIT_POINTS = 12


def _pencil(gen: Generator, lam: float) -> np.ndarray:
    M = -gen.B.astype(complex)
    M[np.diag_indices_from(M)] += 1j * float(lam)
    return M


def _lu(M, lam):
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            lu = scipy.linalg.lu_factor(M, check_finite=False)
        except (scipy.linalg.LinAlgWarning, np.linalg.LinAlgError, ValueError) as exc:
            raise SingularSystemError(f"i*lambda - B is singular at lambda={lam}: {exc}", lam) from exc
    if np.any(np.diag(lu[0]) == 0):
        raise SingularSystemError(f"i*lambda - B is singular at lambda={lam}", lam)
    return lu


def resolve(gen: Generator, lam: float, F) -> np.ndarray:
    """Solve ``(i lam I - B) U = F``; ``F`` may hold several right-hand sides as columns."""
    F = np.asarray(F)
    if F.shape[0] != gen.dim:
        raise ConfigurationError(f"right-hand side must have leading dimension {gen.dim}, got {F.shape}")
    M = _pencil(gen, lam)
    U = scipy.linalg.lu_solve(_lu(M, lam), F.astype(complex), check_finite=False)
    if not np.all(np.isfinite(U)):
        raise SingularSystemError(f"non-finite resolvent solution at lambda={lam}", lam)
    return U


def symmetrized_pencil(gen: Generator, lam: float) -> np.ndarray:
    """``C (i lam I - B) C^-1``; its singular values are those of the pencil in the energy norm."""
    M = -gen.similar.astype(complex)
    M[np.diag_indices_from(M)] += 1j * float(lam)
    return M


def smallest_singular_value(gen: Generator, lam: float, method: str = "auto") -> float:
    """``sigma_min`` of the symmetrized pencil, by dense SVD or inverse iteration."""
    M = symmetrized_pencil(gen, lam)
    if method == "auto":
        method = "svd" if gen.dim <= DENSE_SVD_MAX_DIM else "inverse"
    if method == "svd":
        return float(scipy.linalg.svdvals(M, check_finite=False)[-1])
    if method == "inverse":
        return _sigma_min_inverse_iteration(M, lam)
    raise ConfigurationError(f"unknown method {method!r}")


def _sigma_min_inverse_iteration(M, lam) -> float:
    # largest eigenvalue of (M^H M)^-1 by Lanczos, applied through one LU factorization
    lu = _lu(M, lam)
    dim = M.shape[0]

    def apply(x):
        y = scipy.linalg.lu_solve(lu, np.ravel(x), trans=2, check_finite=False)
        return scipy.linalg.lu_solve(lu, y, check_finite=False)

    op = scipy.sparse.linalg.LinearOperator((dim, dim), matvec=apply, dtype=complex)
    v0 = np.ones(dim, dtype=complex)
    top = scipy.sparse.linalg.eigsh(op, k=1, which="LM", v0=v0, tol=0,
                                    return_eigenvectors=False)[0]
    return float(1.0 / np.sqrt(top.real))


def resolvent_norm(gen: Generator, lam: float, method: str = "auto") -> float:
    """Energy-norm operator norm of ``(i lam I - B)^-1``."""
    smin = smallest_singular_value(gen, lam, method)
    if smin == 0.0:
        return float("inf")
    return 1.0 / smin


def worst_case_rhs(gen: Generator, lam: float) -> np.ndarray:
    """Unit-energy right-hand side attaining the resolvent norm at ``lam``."""
    M = symmetrized_pencil(gen, lam)
    # M v = s u for the smallest s, so M^-1 u = v / s: u is the extremal input
    u, _, _ = scipy.linalg.svd(M)
    z = u[:, -1]
    # back from G-orthonormal coordinates: F = C^-1 z
    return scipy.linalg.solve_triangular(gen.chol, z, lower=False)


def predicted_eta(tau: float, sigma: float, xi: float) -> float:
    """Gevrey exponent ``2r/(r+1)`` with ``r = min(tau, sigma, xi)``."""
    for name, v in (("tau", tau), ("sigma", sigma), ("xi", xi)):
        if not 0.0 <= v <= 1.0:
            raise ConfigurationError(f"{name} must lie in [0, 1], got {v}")
    r = min(tau, sigma, xi)
    if r == 0:
        return 0.0
    return 2.0 * r / (r + 1.0)


@dataclass(eq=False)
class ScanReport:
    lambdas: np.ndarray
    norms: np.ndarray
    eta_fit: float
    fit_window: tuple[float, float]
    fit_residual: float
    eta_predicted: float
    lambda_max_resolved: float
    flagged: bool = False
    warnings: list[str] = field(default_factory=list)


def fit_eta(scan, window=None) -> tuple[float, float]:
    """Least-squares decay exponent of ``log norm`` against ``log lambda``.

    Args:
        scan: a :class:`ScanReport` or a ``(lambdas, norms)`` pair.
        window: ``(lo, hi)`` range of lambdas to fit; everything when None.

    Returns:
        ``(eta, rms_residual)`` with ``eta = -slope``.
    """
    if isinstance(scan, ScanReport):
        lambdas, norms = scan.lambdas, scan.norms
    else:
        lambdas, norms = scan
    lambdas = np.asarray(lambdas, dtype=float)
    norms = np.asarray(norms, dtype=float)
    mask = np.ones(lambdas.shape, dtype=bool)
    if window is not None:
        lo, hi = window
        # relative slack so endpoints produced by logspace are kept
        mask = (lambdas >= lo * (1 - 1e-12)) & (lambdas <= hi * (1 + 1e-12))
    if mask.sum() < MIN_FIT_POINTS:
        raise ConfigurationError(
            f"fit window {window} holds {int(mask.sum())} points, need >= {MIN_FIT_POINTS}"
        )
    x = np.log(lambdas[mask])
    y = np.log(norms[mask])
    if not np.all(np.isfinite(y)) or np.ptp(x) == 0:
        raise ConfigurationError("degenerate fit window")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(-slope), float(np.sqrt(np.mean(resid**2)))


def default_fit_window(lam_min: float, lam_top: float) -> tuple[float, float]:
    """Top 1.5 decades below ``lam_top`` (clipped at ``lam_min``)."""
    return (max(lam_min, lam_top / 10**FIT_DECADES), lam_top)


def _map(fn, items, jobs):
    if jobs is None or jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def scan(gen: Generator, lam_min: float, lam_max: float, count: int = 96,
         window=None, jobs: int = 1) -> ScanReport:
    """Resolvent norms on a log-spaced grid, with the fitted decay exponent."""
    if not (0 < lam_min < lam_max) or not np.isfinite(lam_max):
        raise ConfigurationError(f"need 0 < lambda_min < lambda_max, got {lam_min}, {lam_max}")
    if int(count) != count or count < 8:
        raise ConfigurationError(f"count must be an integer >= 8, got {count}")
    notes = []
    resolved = lambda_max_resolved(gen)
    flagged = False
    if lam_max > resolved * (1 + 1e-12):
        flagged = True
        notes.append(
            f"lambda_max={lam_max:.6g} exceeds the resolved band {resolved:.6g}; "
            "decay beyond it reflects the discretization, not the semigroup"
        )
    lambdas = np.logspace(np.log10(lam_min), np.log10(lam_max), int(count))
    norms = np.array(_map(lambda lam: resolvent_norm(gen, lam), lambdas, jobs))

    if window is None:
        window = default_fit_window(lam_min, min(lam_max, resolved))
    window = (float(window[0]), float(window[1]))
    npts = int(np.sum((lambdas >= window[0] * (1 - 1e-12)) & (lambdas <= window[1] * (1 + 1e-12))))
    eta, resid = float("nan"), float("nan")
    if npts >= MIN_FIT_POINTS:
        eta, resid = fit_eta((lambdas, norms), window)
        if npts < RECOMMENDED_FIT_POINTS:
            notes.append(f"fit window holds only {npts} points")
    else:
        flagged = True
        notes.append(f"fit window {window} holds {npts} points; exponent not fitted")
    p = gen.params
    return ScanReport(
        lambdas=lambdas,
        norms=norms,
        eta_fit=eta,
        fit_window=window,
        fit_residual=resid,
        eta_predicted=predicted_eta(p.tau, p.sigma, p.xi),
        lambda_max_resolved=resolved,
        flagged=flagged,
        warnings=notes,
    )


def resolved_scan(gen: Generator, count: int = 96, decades: float = FIT_DECADES,
                  jobs: int = 1) -> ScanReport:
    """Scan exactly the fit window: the top ``decades`` of the resolved band."""
    top = lambda_max_resolved(gen)
    if top <= 0:
        raise ConfigurationError("spectrum has no imaginary extent; nothing to scan")
    return scan(gen, top / 10**decades, top, count=count, jobs=jobs)


class ProbeId(enum.Enum):
    L3 = "L3"
    L4i = "L4i"
    L4ii = "L4ii"
    L10i = "L10i"
    L10ii = "L10ii"
    L10iii = "L10iii"
    L12 = "L12"
    L13i = "L13i"
    L13ii = "L13ii"
    L15i = "L15i"
    L15ii = "L15ii"

    @classmethod
    def parse(cls, value) -> "ProbeId":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip())
        except ValueError:
            raise ConfigurationError(f"unknown probe {value!r}") from None

    @property
    def system(self) -> SystemId:
        if self.value.startswith(("L3", "L4", "L10")):
            return SystemId.SYSTEM1
        return SystemId.SYSTEM2

    @property
    def deficit(self) -> bool:
        return self in (ProbeId.L4i, ProbeId.L4ii, ProbeId.L13i, ProbeId.L13ii)


EXP_TOL = 1e-12


def probe_precondition(probe: ProbeId, gen: Generator) -> str | None:
    """Reason ``probe`` does not apply to ``gen``, or None when it does."""
    probe = ProbeId.parse(probe)
    if probe.system is not gen.system:
        return f"{probe.value} applies to system {probe.system.value}, generator is system {gen.system.value}"
    p = gen.params
    ranges = {
        ProbeId.L10i: ("tau", p.tau),
        ProbeId.L10ii: ("sigma", p.sigma),
        ProbeId.L10iii: ("xi", p.xi),
        ProbeId.L15ii: ("sigma", p.sigma),
    }
    if probe in ranges:
        name, v = ranges[probe]
        if v < 0.5:
            return f"{probe.value} requires 1/2 <= {name} <= 1, got {name}={v}"
    if probe is ProbeId.L15i:
        if abs(p.tau - p.xi) > EXP_TOL or p.tau < 0.5:
            return f"L15i requires 1/2 <= tau = xi <= 1, got tau={p.tau}, xi={p.xi}"
    return None


def applicable_probes(gen: Generator) -> list[ProbeId]:
    return [pid for pid in ProbeId if probe_precondition(pid, gen) is None]


def _probe_ratio(probe: ProbeId, gen: Generator, lam: float, U, F, weights) -> float:
    grid, p = gen.grid, gen.params
    s = split_state(U, gen.n)
    nF = weighted_norm(grid, F, weights)
    nU = weighted_norm(grid, U, weights)
    denom = nF * nU
    if denom == 0.0:
        return 0.0
    sq = lambda v: float(np.vdot(v, v).real)  # noqa: E731
    al = abs(lam)
    if probe in (ProbeId.L3, ProbeId.L12):
        return nU * nU / denom
    if probe in (ProbeId.L4i, ProbeId.L13i):
        shear = centered_difference(grid) @ s.phi + s.psi
        bend = sq(frac_power_apply(grid, 0.5, s.psi))
        lhs = al * (p.kappa * sq(shear) + p.b * bend)
        rhs = al * (p.rho1 * sq(s.Phi) + p.rho2 * sq(s.Psi))
        if probe is ProbeId.L4i:
            lhs *= p.beta * p.gamma
            rhs *= p.beta * p.gamma
        else:
            rhs += al * p.rho3 * sq(s.Theta)
        return max(0.0, lhs - rhs) / denom
    if probe is ProbeId.L4ii:
        grad = sq(frac_power_apply(grid, 0.5, s.theta))
        lhs = p.beta * p.kappa * p.delta * al * grad
        rhs = p.beta * p.kappa * p.rho3 * al * sq(s.Theta)
        return max(0.0, lhs - rhs) / denom
    if probe is ProbeId.L13ii:
        grad = sq(frac_power_apply(grid, 0.5, s.theta))
        c = max(p.rho1, p.rho3)
        return max(0.0, p.delta * al * grad - c * al * (sq(s.Theta) + sq(s.Phi))) / denom
    if probe is ProbeId.L10i:
        return al * sq(s.Phi) / denom
    if probe in (ProbeId.L10ii, ProbeId.L15ii):
        return al * sq(s.Psi) / denom
    if probe is ProbeId.L10iii:
        return al * sq(s.Theta) / denom
    if probe is ProbeId.L15i:
        return al * (sq(s.Phi) + sq(s.Theta)) / denom
    raise ConfigurationError(f"unhandled probe {probe}")


def random_unit_rhs(gen: Generator, rng) -> np.ndarray:
    """Right-hand side uniformly distributed on the unit energy sphere."""
    z = rng.standard_normal(gen.dim) + 1j * rng.standard_normal(gen.dim)
    z /= np.linalg.norm(z)
    return scipy.linalg.solve_triangular(gen.chol, z, lower=False)


@dataclass(eq=False)
class ProbeResult:
    probe: ProbeId
    lambdas: np.ndarray
    ratios: np.ndarray

    def bounded(self, factor: float = 2.0) -> tuple[float, float, bool]:
        """``(top-decade max, median, top < factor * median)``.

        A deficit that vanishes identically counts as bounded.
        """
        top_lam = self.lambdas.max()
        top = float(np.max(self.ratios[self.lambdas >= top_lam / 10.0]))
        med = float(np.median(self.ratios))
        ok = top < factor * med or (top == 0.0 and med == 0.0)
        return top, med, bool(ok)


def lemma_probe(gen: Generator, probe, lambdas, samples: int = 16, seed: int = 42,
                jobs: int = 1) -> ProbeResult:
    """Largest probe ratio over ``samples`` random right-hand sides at each ``lambda``.

    Right-hand sides have unit energy norm; the ratios themselves use the
    literal energy coefficients (see :func:`paper_weights`).  The generator for each sample is
    seeded from ``(seed, lambda index, sample index)``.
    """
    probe = ProbeId.parse(probe)
    reason = probe_precondition(probe, gen)
    if reason:
        raise ConfigurationError(reason)
    if samples < 1:
        raise ConfigurationError("samples must be >= 1")
    lambdas = np.asarray(lambdas, dtype=float)
    weights = paper_weights(gen.params, gen.system)

    def at(item):
        i, lam = item
        F = np.column_stack([
            random_unit_rhs(gen, np.random.default_rng([seed, i, k])) for k in range(samples)
        ])
        U = resolve(gen, lam, F)
        return max(_probe_ratio(probe, gen, lam, U[:, k], F[:, k], weights) for k in range(samples))

    ratios = np.array(_map(at, list(enumerate(lambdas)), jobs))
    return ProbeResult(probe=probe, lambdas=lambdas, ratios=ratios)


def stationary_check(gen: Generator, samples: int = 16, seed: int = 42) -> float:
    """Largest ``||U||_G / ||F||_G`` over random ``F`` with ``-B U = F``."""
    rng = np.random.default_rng(seed)
    F = np.column_stack([random_unit_rhs(gen, rng) for _ in range(samples)])
    U = resolve(gen, 0.0, F)
    return max(gen.norm(U[:, k]) / gen.norm(F[:, k]) for k in range(samples))
