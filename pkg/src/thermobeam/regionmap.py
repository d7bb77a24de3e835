"""Predicted regularity regions over the exponent cube and measured checks per point."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from thermobeam.errors import ConfigurationError
from thermobeam.grid import build_grid
from thermobeam.model import ModelParams, SystemId, assemble_generator
from thermobeam.resolvent import (
    applicable_probes,
    lemma_probe,
    predicted_eta,
    resolved_scan,
)
from thermobeam.spectrum import lambda_max_resolved, spectral_abscissa

ANALYTIC = "analytic"
GEVREY = "gevrey"
STABLE_ONLY = "stable-only"
LABEL_RANK = {STABLE_ONLY: 0, GEVREY: 1, ANALYTIC: 2}
CHECKS = ("scan", "abscissa", "probes")
EQ_TOL = 1e-12


def classify(tau: float, sigma: float, xi: float, system) -> tuple[str, float]:
    """Regularity predicted for an exponent triple.

    Analytic on [1/2, 1]^3 (second system: only where tau == xi), Gevrey with
    exponent 2r/(r+1) on the rest of the open cube, exponentially stable only
    when some exponent is zero.
    """
    system = SystemId.parse(system)
    eta = predicted_eta(tau, sigma, xi)
    r = min(tau, sigma, xi)
    analytic = r >= 0.5
    if system is SystemId.SYSTEM2:
        analytic = analytic and abs(tau - xi) <= EQ_TOL
    if analytic:
        return ANALYTIC, 1.0
    if r > 0:
        return GEVREY, eta
    return STABLE_ONLY, eta


@dataclass
class RegionPoint:
    tau: float
    sigma: float
    xi: float
    system: SystemId
    predicted: str
    eta_pred: float
    eta_fit: float | None = None
    abscissa: float | None = None
    probes_passed: dict[str, bool] = field(default_factory=dict)
    error: str | None = None


@dataclass
class RegionReport:
    points: list[RegionPoint]
    system: SystemId
    lattice: list[tuple[float, float, float]]
    base_params: ModelParams
    n: int
    L: float
    checks: tuple[str, ...]
    seed: int


def cube_lattice(values) -> list[tuple[float, float, float]]:
    """All triples from ``values``, tau varying slowest."""
    vals = [float(v) for v in values]
    return list(itertools.product(vals, vals, vals))


def _measure(point: RegionPoint, base: ModelParams, n: int, L: float, checks, seed: int,
             scan_count: int, probe_count: int, samples: int) -> RegionPoint:
    try:
        params = base.replace(tau=point.tau, sigma=point.sigma, xi=point.xi)
        gen = assemble_generator(params, build_grid(n, L), point.system)
        if "abscissa" in checks:
            point.abscissa = spectral_abscissa(gen)
        if "scan" in checks:
            point.eta_fit = resolved_scan(gen, count=scan_count).eta_fit
        if "probes" in checks:
            top = lambda_max_resolved(gen)
            if top <= 1.0:
                raise ConfigurationError(f"resolved band {top:.3g} does not reach lambda = 1")
            lambdas = np.logspace(0.0, np.log10(top), probe_count)
            for pid in applicable_probes(gen):
                res = lemma_probe(gen, pid, lambdas, samples=samples, seed=seed)
                point.probes_passed[pid.value] = res.bounded()[2]
    except Exception as exc:  # recorded in-row; the sweep carries on
        point.error = f"{type(exc).__name__}: {exc}"
    return point


def sweep(base_params: ModelParams, n: int, L: float, lattice, system, checks=(),
          seed: int = 42, jobs: int = 1, scan_count: int = 48, probe_count: int = 16,
          samples: int = 16) -> RegionReport:
    """Classify every lattice point and run the requested measurements."""
    system = SystemId.parse(system)
    checks = tuple(checks)
    unknown = set(checks) - set(CHECKS)
    if unknown:
        raise ConfigurationError(f"unknown checks {sorted(unknown)}; allowed {CHECKS}")
    lattice = [tuple(float(v) for v in pt) for pt in lattice]
    if not lattice:
        raise ConfigurationError("lattice is empty")
    for pt in lattice:
        if len(pt) != 3 or not all(0.0 <= v <= 1.0 for v in pt):
            raise ConfigurationError(f"lattice point {pt} is not in [0, 1]^3")
    if checks:
        build_grid(n, L)

    points = []
    for tau, sigma, xi in lattice:
        label, eta = classify(tau, sigma, xi, system)
        points.append(RegionPoint(tau, sigma, xi, system, label, eta))

    if checks:
        def work(pt):
            return _measure(pt, base_params, n, L, checks, seed, scan_count, probe_count, samples)

        if jobs and jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                points = list(pool.map(work, points))
        else:
            points = [work(pt) for pt in points]

    return RegionReport(points=points, system=system, lattice=lattice, base_params=base_params,
                        n=n, L=L, checks=checks, seed=seed)
