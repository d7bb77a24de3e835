"""Acceptance criteria, each at its stated tolerance.

Every test appends one ``CRITERION k: PASS/FAIL`` line that the terminal
summary prints under "acceptance criteria".  Criteria known to be out of reach
at finite resolution are still asserted as stated.
"""

import itertools
import math

import numpy as np
import pytest

import conftest
from conftest import make_gen
from thermobeam.cli import main
from thermobeam.evolve import fit_decay_rate, midpoint_energy_defects, propagate
from thermobeam.grid import build_grid, frac_power_apply
from thermobeam.model import ModelParams, assemble_generator, dissipation_form, random_state
from thermobeam.regionmap import ANALYTIC, classify, cube_lattice
from thermobeam.resolvent import (
    applicable_probes,
    lemma_probe,
    resolved_scan,
    resolvent_norm,
    stationary_check,
    worst_case_rhs,
    resolve,
)
from thermobeam.spectrum import axis_gap, lambda_max_resolved, spectral_abscissa


def record(k, ok, detail):
    conftest.ACCEPTANCE_LINES.append(f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_01_operator_algebra():
    rng = np.random.default_rng(1)
    worst = 0.0
    for n in (16, 64):
        grid = build_grid(n, math.pi)
        for _ in range(50):
            a, b = rng.uniform(-1, 1, 2)
            x = rng.standard_normal(n)
            lhs = frac_power_apply(grid, a, frac_power_apply(grid, b, x))
            err = np.linalg.norm(lhs - frac_power_apply(grid, a + b, x)) / np.linalg.norm(x)
            worst = max(worst, err)
        x = rng.standard_normal(n)
        half = frac_power_apply(grid, 0.5, frac_power_apply(grid, 0.5, x))
        sq = np.linalg.norm(half - frac_power_apply(grid, 1.0, x)) / np.linalg.norm(x)
        worst = max(worst, sq)
    record(1, worst <= 1e-10, f"operator algebra worst relative error {worst:.2e} (limit 1e-10)")


def test_criterion_02_dissipativity():
    worst = 0.0
    for system in (1, 2):
        for extra in ({}, {"beta": 2.0, "gamma": 3.0, "mu": 1.5}):
            gen = make_gen(64, system, tau=0.3, sigma=0.7, xi=0.5, **extra)
            for s in range(100):
                U = random_state(gen, s)
                q = gen.inner(gen.B @ U, U).real
                worst = max(worst, abs(q + dissipation_form(U, gen)) / max(1.0, abs(q)))
    record(2, worst <= 1e-9, f"dissipativity worst scaled residual {worst:.2e} (limit 1e-9)")


def test_criterion_03_exponential_stability():
    bad = []
    worst = -np.inf
    for system in (1, 2):
        for ex in itertools.product((0.0, 0.5, 1.0), repeat=3):
            gen = make_gen(32, system, tau=ex[0], sigma=ex[1], xi=ex[2])
            a, g = spectral_abscissa(gen), axis_gap(gen)
            worst = max(worst, a)
            if not (a < 0 and g > 0):
                bad.append((system, ex))
    record(3, not bad, f"54 lattice generators, largest abscissa {worst:.3e}, failures {bad}")


def test_criterion_04_analytic_scaling():
    cases = [(1, (1.0, 1.0, 1.0)), (1, (0.5, 0.75, 1.0)), (2, (0.75, 0.6, 0.75))]
    fits = []
    for system, ex in cases:
        gen = make_gen(96, system, tau=ex[0], sigma=ex[1], xi=ex[2])
        fits.append((system, ex, resolved_scan(gen, count=96).eta_fit))
    ok = all(0.85 <= eta <= 1.15 for *_, eta in fits)
    detail = ", ".join(f"S{s}{ex}: {eta:.4f}" for s, ex, eta in fits)
    record(4, ok, f"eta_fit in [0.85, 1.15]: {detail}")


def test_criterion_05_gevrey_trend():
    cases = [(1, (0.5, 0.5, 0.5)), (1, (0.25, 0.75, 0.75)), (2, (0.5, 0.5, 0.5))]
    ok = True
    parts = []
    for system, ex in cases:
        fits = {}
        for n in (48, 96):
            gen = make_gen(n, system, tau=ex[0], sigma=ex[1], xi=ex[2])
            fits[n] = resolved_scan(gen, count=96)
        pred = fits[96].eta_predicted
        band = all(fits[n].eta_fit >= pred - 0.2 for n in fits)
        trend = abs(fits[96].eta_fit - pred) <= abs(fits[48].eta_fit - pred)
        ok &= band and trend
        parts.append(f"S{system}{ex} pred {pred:.3f} fit {fits[48].eta_fit:.4f}->{fits[96].eta_fit:.4f}"
                     f" band={'ok' if band else 'no'} trend={'ok' if trend else 'no'}")
    record(5, ok, "; ".join(parts))


def test_criterion_06_probes_bounded():
    failures, parts = [], []
    for system in (1, 2):
        gen = make_gen(64, system, tau=0.5, sigma=0.5, xi=0.5)
        lambdas = np.logspace(0.0, np.log10(lambda_max_resolved(gen)), 32)
        for pid in applicable_probes(gen):
            top, med, ok = lemma_probe(gen, pid, lambdas, samples=16, seed=42).bounded()
            parts.append(f"{pid.value} {top:.3g}/{med:.3g}")
            if not ok:
                failures.append(pid.value)
    record(6, not failures, f"top-decade max / median: {', '.join(parts)}; unbounded {failures}")


def test_criterion_07_stationary_solvability():
    parts, ok = [], True
    for system in (1, 2):
        gen = make_gen(64, system)
        amp = stationary_check(gen, samples=16, seed=42)
        norm = resolvent_norm(gen, 0.0)
        F = worst_case_rhs(gen, 0.0)
        attained = gen.norm(resolve(gen, 0.0, F)) / gen.norm(F)
        this = np.isfinite(amp) and amp <= norm + 1e-9 and abs(attained - norm) <= 1e-9 * norm
        ok &= bool(this)
        parts.append(f"S{system} sampled {amp:.6g} <= norm {norm:.6g}, extremal {attained:.6g}")
    record(7, ok, "; ".join(parts))


def test_criterion_08_time_domain():
    gen = make_gen(16, 1, tau=0.5, sigma=0.75, xi=1.0)
    traj = propagate(gen, random_state(gen, 1), 20.0, 1000, "implicit-midpoint")
    step_defect = float(np.max(np.abs(midpoint_energy_defects(gen, traj))))
    rises = float(np.max(np.diff(traj.energies)))
    drift = 0.0
    for system in (1, 2):
        cons = assemble_generator(ModelParams().undamped(system), build_grid(16, math.pi), system)
        t = propagate(cons, random_state(cons, 2), 10.0, 1000, "implicit-midpoint")
        drift = max(drift, float(np.max(np.abs(t.energies - t.energies[0]))))
    slow = make_gen(16, 1)
    a = spectral_abscissa(slow)
    rate = fit_decay_rate(propagate(slow, random_state(slow, 42), 3000.0, 500, "eigen-exact"))
    rel = abs(rate - a) / abs(a)
    ok = rises <= 0.0 + 1e-15 and step_defect <= 1e-9 and drift <= 1e-9 and rel <= 0.05
    record(8, ok, f"max energy increase {rises:.1e}, step defect {step_defect:.1e}, conservative drift "
                  f"{drift:.1e}, rate {rate:.7g} vs abscissa {a:.7g} (rel {rel:.1e})")


def test_criterion_09_region_classifier():
    lattice = cube_lattice([0.25, 0.5, 0.75])
    s1 = {pt for pt in lattice if classify(*pt, 1)[0] == ANALYTIC}
    s2 = {pt for pt in lattice if classify(*pt, 2)[0] == ANALYTIC}
    want1 = {pt for pt in lattice if min(pt) >= 0.5}
    want2 = {pt for pt in want1 if pt[0] == pt[2]}
    ok = s1 == want1 and s2 == want2 and len(s1) == 8 and len(s2) == 4
    record(9, ok, f"analytic counts: system 1 {len(s1)}, system 2 {len(s2)}")


@pytest.mark.parametrize("command, tables", [("verify", ()), ("spectrum", ("spectrum.csv",)),
                                             ("resolvent-scan", ("scan.csv",)),
                                             ("probe", ("probe.csv",)),
                                             ("simulate", ("trace.csv",)),
                                             ("region-map", ("region.csv",))])
def test_criterion_10_reproducibility(tmp_path, command, tables):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 32\ntau = 0.5\nsigma = 0.5\nxi = 0.5\nseed = 7\n"
                   "[verify]\nsamples = 20\n[resolvent-scan]\ncount = 24\n"
                   "[probe]\ncount = 6\nsamples = 4\n[simulate]\nsteps = 300\nt_end = 10\n"
                   "[region-map]\nvalues = 0.5 1\nchecks = abscissa\n")
    codes = []
    for tag in ("a", "b"):
        codes.append(main([command, "--config", str(cfg), "--out", str(tmp_path / tag)]))
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in tables + ("report.json",))
    ok = same and codes[0] == codes[1] and codes[0] != 2
    record(10, ok, f"{command}: byte-identical reports={same}, exit codes {codes}")
