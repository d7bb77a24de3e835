"""Command-line entry point.

Exit status: 0 when every in-run check passes, 1 when a check fails, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from thermobeam import reports
from thermobeam.config import COMMANDS, RunConfig, build_config, parse_config, region_lattice, validate
from thermobeam.errors import ConfigurationError, SingularSystemError
from thermobeam.evolve import (
    fit_decay_rate,
    high_frequency_state,
    midpoint_energy_defects,
    propagate,
    smoothing_profile,
)
from thermobeam.grid import build_grid, centered_difference, frac_power_apply, frac_power_matrix, laplacian_matrix
from thermobeam.model import SystemId, assemble_generator, dissipation_form, random_state
from thermobeam.regionmap import sweep
from thermobeam.resolvent import (
    ProbeId,
    applicable_probes,
    lemma_probe,
    resolvent_norm,
    scan,
    stationary_check,
)
from thermobeam.spectrum import (
    axis_gap,
    conjugation_defect,
    eigenvalues,
    lambda_max_resolved,
    spectral_abscissa,
)

log = logging.getLogger("thermobeam")


class Run:
    """Collects named checks and the report payload of one command."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.checks: list[dict] = []
        self.results: dict = {}
        self.tables: dict[str, tuple[list[str], list]] = {}

    def check(self, name: str, value: float, limit: float, passed: bool, detail: str = ""):
        self.checks.append({"name": name, "value": float(value), "limit": float(limit),
                            "passed": bool(passed), "detail": detail})
        if not passed:
            log.error("check failed: %s (value %.6g, limit %.6g) %s", name, value, limit, detail)

    @property
    def ok(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def report(self) -> dict:
        return {
            "schema": reports.SCHEMA_VERSION,
            "command": self.command,
            "config": self.cfg.as_dict(),
            "passed": self.ok,
            "checks": self.checks,
            "results": self.results,
        }


def _generator(cfg: RunConfig, params=None):
    return assemble_generator(params or cfg.params, build_grid(cfg.n, cfg.L), cfg.system)


def cmd_verify(run: Run):
    cfg = run.cfg
    opts = cfg.section("verify")
    gen = _generator(cfg)
    grid = gen.grid
    rng = np.random.default_rng(cfg.seed)

    worst = 0.0
    for k in range(opts["samples"]):
        U = random_state(gen, [cfg.seed, k])
        q = gen.inner(gen.B @ U, U).real
        worst = max(worst, abs(q + dissipation_form(U, gen)) / max(1.0, abs(q)))
    run.check("dissipativity_residual", worst, 1e-9, worst <= 1e-9,
              "|Re<BU,U>_G + dissipation(U)| / max(1, |Re<BU,U>_G|)")

    cons = _generator(cfg, cfg.params.undamped(cfg.system))
    worst_c = 0.0
    for k in range(opts["samples"]):
        U = random_state(cons, [cfg.seed, k])
        worst_c = max(worst_c, abs(cons.inner(cons.B @ U, U).real))
    run.check("conservative_residual", worst_c, 1e-12, worst_c <= 1e-12,
              "|Re<BU,U>_G| with all damping removed, unit-norm states")

    sym = float(np.max(np.abs(gen.G - gen.G.T)) / np.max(np.abs(gen.G)))
    run.check("gram_symmetry", sym, 1e-12, sym <= 1e-12)

    x = rng.standard_normal(grid.n)
    worst_p = 0.0
    for nu1, nu2 in rng.uniform(-1, 1, size=(20, 2)):
        lhs = frac_power_apply(grid, nu1, frac_power_apply(grid, nu2, x))
        worst_p = max(worst_p, np.linalg.norm(lhs - frac_power_apply(grid, nu1 + nu2, x)) / np.linalg.norm(x))
    run.check("power_law", worst_p, 1e-10, worst_p <= 1e-10)

    A = laplacian_matrix(grid)
    R = frac_power_matrix(grid, 0.5)
    sq = float(np.max(np.abs(R @ R - A)) / np.max(np.abs(A)))
    run.check("square_root", sq, 1e-10, sq <= 1e-10)

    D0 = centered_difference(grid)
    skew = float(np.max(np.abs(D0 + D0.T)))
    run.check("skew_difference", skew, 0.0, skew == 0.0)

    amp = stationary_check(gen, samples=opts["probe_samples"], seed=cfg.seed)
    rn0 = resolvent_norm(gen, 0.0)
    run.check("stationary_finite", amp, rn0 + 1e-9, bool(np.isfinite(amp) and amp <= rn0 + 1e-9),
              "max ||B^-1 F||_G over random unit F versus ||B^-1||_G")
    run.results.update({"stationary_amplification": amp, "resolvent_norm_at_zero": rn0})


def cmd_spectrum(run: Run):
    gen = _generator(run.cfg)
    ev = eigenvalues(gen)
    absc = spectral_abscissa(gen)
    gap = axis_gap(gen)
    conj = conjugation_defect(ev)
    run.check("conjugation_closure", conj, 1e-8, conj <= 1e-8)
    run.check("abscissa_nonpositive", absc, 1e-8, absc <= 1e-8)
    if gen.is_damped:
        run.check("abscissa_negative", absc, 0.0, absc < 0)
        run.check("axis_gap_positive", gap, 0.0, gap > 0)
    run.results.update({
        "abscissa": absc,
        "axis_gap": gap,
        "lambda_max_resolved": lambda_max_resolved(gen),
        "count": int(ev.size),
    })
    run.tables["spectrum.csv"] = (["re", "im"], [(z.real, z.imag) for z in ev])


def cmd_scan(run: Run):
    cfg = run.cfg
    opts = cfg.section("resolvent-scan")
    gen = _generator(cfg)
    top = lambda_max_resolved(gen)
    hi = opts["lambda_max"] if opts["lambda_max"] is not None else top
    lo = opts["lambda_min"] if opts["lambda_min"] is not None else hi / 10**1.5
    window = None
    if opts["window_min"] is not None:
        window = (opts["window_min"], opts["window_max"])
    rep = scan(gen, lo, hi, count=opts["count"], window=window, jobs=cfg.jobs)
    finite = bool(np.all(np.isfinite(rep.norms)) and np.all(rep.norms > 0))
    run.check("norms_finite_positive", float(finite), 1.0, finite)
    run.results.update({
        "eta_fit": rep.eta_fit,
        "fit_window": list(rep.fit_window),
        "fit_residual": rep.fit_residual,
        "eta_predicted": rep.eta_predicted,
        "lambda_max_resolved": rep.lambda_max_resolved,
        "flagged": rep.flagged,
        "warnings": rep.warnings,
    })
    run.tables["scan.csv"] = (["lambda", "resolvent_norm"], list(zip(rep.lambdas, rep.norms)))


def cmd_probe(run: Run):
    cfg = run.cfg
    opts = cfg.section("probe")
    gen = _generator(cfg)
    if "all" in opts["probes"]:
        probes = applicable_probes(gen)
    else:
        probes = [ProbeId.parse(p) for p in opts["probes"]]
    hi = opts["lambda_max"] if opts["lambda_max"] is not None else lambda_max_resolved(gen)
    if hi <= opts["lambda_min"]:
        raise ConfigurationError(
            f"[probe] lambda range [{opts['lambda_min']}, {hi:.6g}] is empty "
            "(resolved band too short for these exponents)"
        )
    lambdas = np.logspace(np.log10(opts["lambda_min"]), np.log10(hi), opts["count"])
    rows = []
    summary = {}
    for pid in probes:
        res = lemma_probe(gen, pid, lambdas, samples=opts["samples"], seed=cfg.seed, jobs=cfg.jobs)
        top, med, ok = res.bounded()
        run.check(f"{pid.value}_bounded", top, 2.0 * med, ok, "top-decade max < 2 x median")
        summary[pid.value] = {"top_decade_max": top, "median": med}
        rows.extend((pid.value, lam, r) for lam, r in zip(res.lambdas, res.ratios))
    run.results["probes"] = summary
    run.tables["probe.csv"] = (["probe", "lambda", "max_ratio"], rows)


def cmd_simulate(run: Run):
    cfg = run.cfg
    opts = cfg.section("simulate")
    gen = _generator(cfg)
    if opts["initial"] == "random":
        U0 = random_state(gen, cfg.seed)
    else:
        U0 = high_frequency_state(gen)
    traj = propagate(gen, U0, opts["t_end"], opts["steps"], opts["method"])
    E = traj.energies
    steps_up = np.diff(E) / E[:-1]
    worst_up = float(np.max(steps_up, initial=-np.inf))
    run.check("energy_nonincreasing", worst_up, 1e-9, worst_up <= 1e-9,
              "largest relative energy increase per step")
    if traj.method == "implicit-midpoint":
        defects = midpoint_energy_defects(gen, traj)
        scale = np.maximum(1.0, np.abs(np.diff(E)))
        worst_d = float(np.max(np.abs(defects) / scale))
        run.check("discrete_energy_law", worst_d, 1e-9, worst_d <= 1e-9,
                  "|E(k+1) - E(k) + dt * dissipation(midpoint)|")
    rate = None
    try:
        rate = fit_decay_rate(traj, opts["tail_fraction"])
    except ConfigurationError as exc:
        traj.warnings.append(str(exc))
    smooth = smoothing_profile(gen, traj)
    run.results.update({
        "method": traj.method,
        "decay_rate": rate,
        "abscissa": spectral_abscissa(gen),
        "initial_energy": float(E[0]),
        "final_energy": float(E[-1]),
        "smoothing_ratio_start": float(smooth[0]),
        "smoothing_ratio_end": float(smooth[-1]),
        "warnings": traj.warnings,
    })
    run.tables["trace.csv"] = (["t", "energy"], list(zip(traj.times, E)))


def cmd_region(run: Run):
    cfg = run.cfg
    opts = cfg.section("region-map")
    rep = sweep(cfg.params, cfg.n, cfg.L, region_lattice(cfg), cfg.system, checks=opts["checks"],
                seed=cfg.seed, jobs=cfg.jobs, scan_count=opts["scan_count"],
                probe_count=opts["probe_count"], samples=opts["samples"])
    errors = [p for p in rep.points if p.error]
    run.check("rows_without_error", len(errors), 0, not errors,
              "; ".join(f"({p.tau}, {p.sigma}, {p.xi}): {p.error}" for p in errors))
    if "abscissa" in rep.checks:
        bad = [p for p in rep.points if p.abscissa is not None and not p.abscissa < 0]
        run.check("abscissa_negative", len(bad), 0, not bad)
    counts = {}
    for p in rep.points:
        counts[p.predicted] = counts.get(p.predicted, 0) + 1
    run.results.update({"label_counts": counts, "checks_run": list(rep.checks)})
    rows = []
    for p in rep.points:
        probes = " ".join(f"{k}={'pass' if v else 'fail'}" for k, v in sorted(p.probes_passed.items()))
        rows.append((p.tau, p.sigma, p.xi, p.system.value, p.predicted, p.eta_pred,
                     p.eta_fit, p.abscissa, probes, p.error or ""))
    run.tables["region.csv"] = (
        ["tau", "sigma", "xi", "system", "predicted", "eta_pred", "eta_fit", "abscissa",
         "probes", "error"],
        rows,
    )


HANDLERS = {
    "verify": cmd_verify,
    "spectrum": cmd_spectrum,
    "resolvent-scan": cmd_scan,
    "probe": cmd_probe,
    "simulate": cmd_simulate,
    "region-map": cmd_region,
}


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return build_config({})
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def run_command(cfg: RunConfig, command: str, out: Path) -> int:
    """Run ``command`` and write its reports into ``out``; returns the exit status."""
    run = Run(cfg, command)
    try:
        HANDLERS[command](run)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SingularSystemError as exc:
        run.check("solvable", float("nan"), 0.0, False, str(exc))
    out.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in run.tables.items():
        reports.write_csv(out / name, header, rows)
    reports.write_json(out / "report.json", run.report())
    for c in run.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  value={c['value']:.6g}  limit={c['limit']:.6g}")
    return 0 if run.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="thermobeam",
        description="Resolvent, spectral and time-domain checks for thermoelastic Timoshenko beams "
                    "with fractional damping.",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--out", default="out", help="output directory (default: ./out)")
    ap.add_argument("--seed", type=int, help="override the configured seed")
    ap.add_argument("--system", choices=("1", "2"), help="override the configured system")
    ap.add_argument("--jobs", type=int, help="worker threads for scans and sweeps")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.system is not None:
            cfg.system = SystemId.parse(args.system)
        if args.jobs is not None:
            cfg.jobs = args.jobs
        validate(cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return run_command(cfg, args.command, Path(args.out))


if __name__ == "__main__":
    sys.exit(main())
