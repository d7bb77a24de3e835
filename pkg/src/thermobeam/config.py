"""Run configuration: flat ``key = value`` files with ``[command]`` sections.

Example::

    # first model, Gevrey corner
    system = 1
    n = 64
    L = pi
    tau = 0.5
    sigma = 0.5
    xi = 0.5

    [resolvent-scan]
    count = 96
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from thermobeam.errors import ConfigurationError
from thermobeam.model import ModelParams, SystemId

COMMANDS = ("verify", "spectrum", "resolvent-scan", "probe", "simulate", "region-map")

PARAM_KEYS = tuple(f.name for f in dataclasses.fields(ModelParams))
GLOBAL_KEYS = ("system", "n", "L", "seed", "jobs") + PARAM_KEYS

DEFAULTS = {"system": SystemId.SYSTEM1, "n": 64, "L": math.pi, "seed": 42, "jobs": 1}


def _float(text: str) -> float:
    t = text.strip().lower()
    if t in ("pi", "π"):
        return math.pi
    try:
        return float(t)
    except ValueError:
        raise ValueError(f"not a number: {text!r}") from None


def _int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ValueError(f"not an integer: {text!r}") from None


def _opt_float(text: str):
    t = text.strip().lower()
    return None if t in ("", "auto", "none") else _float(t)


def _floats(text: str) -> list[float]:
    return [_float(v) for v in text.replace(",", " ").split()]


def _words(text: str) -> list[str]:
    return [w for w in text.replace(",", " ").split() if w]


def _points(text: str) -> list[tuple[float, float, float]]:
    pts = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        vals = _floats(chunk)
        if len(vals) != 3:
            raise ValueError(f"lattice point needs three values: {chunk.strip()!r}")
        pts.append(tuple(vals))
    return pts


# per-command keys: name -> (parser, default)
SECTION_SCHEMA = {
    "verify": {
        "samples": (_int, 100),
        "probe_samples": (_int, 16),
    },
    "spectrum": {},
    "resolvent-scan": {
        "lambda_min": (_opt_float, None),
        "lambda_max": (_opt_float, None),
        "count": (_int, 96),
        "window_min": (_opt_float, None),
        "window_max": (_opt_float, None),
    },
    "probe": {
        "probes": (_words, ["all"]),
        "samples": (_int, 16),
        "count": (_int, 32),
        "lambda_min": (_float, 1.0),
        "lambda_max": (_opt_float, None),
    },
    "simulate": {
        "t_end": (_float, 20.0),
        "steps": (_int, 2000),
        "method": (str.strip, "implicit-midpoint"),
        "tail_fraction": (_float, 0.5),
        "initial": (str.strip, "random"),
    },
    "region-map": {
        "values": (_floats, [0.25, 0.5, 0.75]),
        "points": (_points, None),
        "checks": (_words, []),
        "scan_count": (_int, 48),
        "probe_count": (_int, 16),
        "samples": (_int, 16),
    },
}


@dataclass
class RunConfig:
    system: SystemId = SystemId.SYSTEM1
    params: ModelParams = field(default_factory=ModelParams)
    n: int = 64
    L: float = math.pi
    seed: int = 42
    jobs: int = 1
    sections: dict = field(default_factory=dict)

    def section(self, command: str) -> dict:
        """Resolved settings for ``command``, defaults filled in."""
        if command not in SECTION_SCHEMA:
            raise ConfigurationError(f"unknown command {command!r}")
        out = {k: default for k, (_, default) in SECTION_SCHEMA[command].items()}
        out.update(self.sections.get(command, {}))
        return out

    def as_dict(self) -> dict:
        return {
            "system": self.system.value,
            "n": self.n,
            "L": self.L,
            "seed": self.seed,
            "jobs": self.jobs,
            "params": dataclasses.asdict(self.params),
            "sections": {cmd: self.section(cmd) for cmd in COMMANDS},
        }


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; every problem raises :class:`ConfigurationError`
    naming the offending line and key."""
    top: dict[str, str] = {}
    sections: dict[str, dict[str, str]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigurationError(f"line {lineno}: malformed section header {raw.strip()!r}")
            current = line[1:-1].strip()
            if current not in SECTION_SCHEMA:
                raise ConfigurationError(f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        target = top if current is None else sections[current]
        allowed = GLOBAL_KEYS if current is None else SECTION_SCHEMA[current]
        where = "top level" if current is None else f"section [{current}]"
        if key not in allowed:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r} in {where}")
        if key in target:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r} in {where}")
        target[key] = value
    return build_config(top, sections)


def build_config(top: dict, sections: dict | None = None) -> RunConfig:
    sections = sections or {}
    values = dict(DEFAULTS)
    param_values = {}
    for key, raw in top.items():
        if key not in GLOBAL_KEYS:
            raise ConfigurationError(f"unknown key {key!r}")
        try:
            if key == "system":
                values[key] = SystemId.parse(raw)
            elif key in ("n", "seed", "jobs"):
                values[key] = _int(raw) if isinstance(raw, str) else int(raw)
            elif key == "L":
                values[key] = _float(raw) if isinstance(raw, str) else float(raw)
            else:
                param_values[key] = _float(raw) if isinstance(raw, str) else float(raw)
        except ValueError as exc:
            raise ConfigurationError(f"key {key!r}: {exc}") from None
    try:
        params = ModelParams(**param_values)
    except ConfigurationError as exc:
        raise ConfigurationError(f"invalid model parameters: {exc}") from None

    parsed_sections = {}
    for cmd, entries in sections.items():
        schema = SECTION_SCHEMA.get(cmd)
        if schema is None:
            raise ConfigurationError(f"unknown section [{cmd}]")
        out = {}
        for key, raw in entries.items():
            if key not in schema:
                raise ConfigurationError(f"unknown key {key!r} in section [{cmd}]")
            parser = schema[key][0]
            try:
                out[key] = parser(raw) if isinstance(raw, str) else raw
            except ValueError as exc:
                raise ConfigurationError(f"key {key!r} in section [{cmd}]: {exc}") from None
        parsed_sections[cmd] = out

    cfg = RunConfig(system=values["system"], params=params, n=values["n"], L=values["L"],
                    seed=values["seed"], jobs=values["jobs"], sections=parsed_sections)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Check every module precondition before any computation runs."""
    from thermobeam.grid import build_grid
    from thermobeam.model import derive_weights
    from thermobeam.evolve import METHODS
    from thermobeam.regionmap import CHECKS
    from thermobeam.resolvent import ProbeId

    build_grid(cfg.n, cfg.L)
    derive_weights(cfg.params, cfg.system)
    if cfg.jobs < 1:
        raise ConfigurationError(f"jobs must be >= 1, got {cfg.jobs}")
    if cfg.seed < 0:
        raise ConfigurationError(f"seed must be >= 0, got {cfg.seed}")

    v = cfg.section("verify")
    if v["samples"] < 1 or v["probe_samples"] < 1:
        raise ConfigurationError("[verify] samples must be >= 1")

    s = cfg.section("resolvent-scan")
    if s["count"] < 8:
        raise ConfigurationError(f"[resolvent-scan] count must be >= 8, got {s['count']}")
    lo, hi = s["lambda_min"], s["lambda_max"]
    if lo is not None and lo <= 0:
        raise ConfigurationError("[resolvent-scan] lambda_min must be > 0")
    if lo is not None and hi is not None and hi <= lo:
        raise ConfigurationError("[resolvent-scan] lambda_max must exceed lambda_min")
    if (s["window_min"] is None) != (s["window_max"] is None):
        raise ConfigurationError("[resolvent-scan] window_min and window_max go together")

    p = cfg.section("probe")
    for name in p["probes"]:
        if name != "all":
            ProbeId.parse(name)
    if p["samples"] < 1 or p["count"] < 2:
        raise ConfigurationError("[probe] samples must be >= 1 and count >= 2")
    if p["lambda_min"] <= 0:
        raise ConfigurationError("[probe] lambda_min must be > 0")

    m = cfg.section("simulate")
    if m["method"] not in METHODS:
        raise ConfigurationError(f"[simulate] method must be one of {METHODS}, got {m['method']!r}")
    if m["initial"] not in ("random", "high-frequency"):
        raise ConfigurationError(f"[simulate] initial must be 'random' or 'high-frequency', got {m['initial']!r}")
    if not m["t_end"] > 0 or m["steps"] < 1:
        raise ConfigurationError("[simulate] need t_end > 0 and steps >= 1")
    if not 0 < m["tail_fraction"] <= 1:
        raise ConfigurationError("[simulate] tail_fraction must lie in (0, 1]")

    r = cfg.section("region-map")
    lattice = region_lattice(cfg)
    if not lattice:
        raise ConfigurationError("[region-map] lattice is empty")
    for pt in lattice:
        if not all(0.0 <= x <= 1.0 for x in pt):
            raise ConfigurationError(f"[region-map] lattice point {pt} outside [0, 1]^3")
    bad = set(r["checks"]) - set(CHECKS)
    if bad:
        raise ConfigurationError(f"[region-map] unknown checks {sorted(bad)}; allowed {CHECKS}")


def region_lattice(cfg: RunConfig) -> list[tuple[float, float, float]]:
    from thermobeam.regionmap import cube_lattice

    r = cfg.section("region-map")
    if r["points"] is not None:
        return list(r["points"])
    return cube_lattice(r["values"])
