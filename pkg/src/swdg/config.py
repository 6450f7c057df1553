"""Run configuration: flat ``key = value`` files with ``#`` comments.

Recognised keys::

    scenario            scenario name (required)
    scenario.<param>    constructor parameter of the scenario (e.g. scenario.case = C)
    mesh.file           mesh file; otherwise the scenario's uniform mesh with
    mesh.nx, mesh.ny, mesh.split, mesh.levels   overriding its defaults
    form                strong | weak
    limiter             vertex | edge
    momentum            velocity | direct
    tol_wet, g          thin-layer tolerance (m), gravity (m/s^2)
    dt | cfl            fixed step (s) or adaptive target Courant number
    dt_floor            absolute lower bound on adaptive steps (s)
    cfl_metric          patch | inradius
    t_end, max_steps    stop time (s), optional step cap
    output              output directory
    snapshot_interval   steps between snapshots (0: initial and final only)
    snapshot_format     csv | vtk
    diagnostic_interval steps between diagnostics rows
    gauge_interval      steps between gauge samples
    gauge.<id>          x, y
    section.<id>        y = value | x = value [, samples]
    backend             numba | numpy
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .scenarios import CONICAL_GAUGES, SCENARIOS, ScenarioSpec, make_scenario


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


ENUMS = {
    "form": ("strong", "weak"),
    "limiter": ("vertex", "edge"),
    "momentum": ("velocity", "direct"),
    "snapshot_format": ("csv", "vtk"),
    "cfl_metric": ("patch", "inradius"),
    "backend": ("numba", "numpy"),
    "mesh.split": ("two", "four"),
}
FLOATS = ("tol_wet", "g", "dt", "cfl", "dt_floor", "t_end")
INTS = ("max_steps", "snapshot_interval", "diagnostic_interval", "gauge_interval",
        "mesh.nx", "mesh.ny", "mesh.levels")
PLAIN = ("scenario", "output", "mesh.file")


@dataclass
class Section:
    name: str
    axis: str           # "x" or "y": the coordinate held fixed
    value: float
    samples: int = 3


@dataclass
class RunConfig:
    scenario: str
    scenario_params: dict = field(default_factory=dict)
    mesh_file: str | None = None
    mesh: dict = field(default_factory=dict)
    form: str = "strong"
    limiter: str = "vertex"
    momentum: str = "velocity"
    tol_wet: float = 1e-6
    g: float = 9.80616
    dt: float | None = None
    cfl: float | None = None
    dt_floor: float | None = None
    cfl_metric: str = "patch"
    t_end: float = 1.0
    max_steps: int | None = None
    output: str = "out"
    snapshot_interval: int = 0
    snapshot_format: str = "csv"
    diagnostic_interval: int = 1
    gauge_interval: int = 1
    gauges: dict = field(default_factory=dict)
    sections: list = field(default_factory=list)
    backend: str = "numba"

    def build_scenario(self) -> ScenarioSpec:
        return _make(self.scenario, self.scenario_params, self.g)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gauges"] = {k: list(v) for k, v in self.gauges.items()}
        return d

    def to_pairs(self) -> list[tuple[str, str]]:
        """Flat key/value pairs that parse back to this configuration."""
        out = [("scenario", self.scenario)]
        out += [(f"scenario.{k}", _fmt(v)) for k, v in sorted(self.scenario_params.items())]
        if self.mesh_file:
            out.append(("mesh.file", self.mesh_file))
        out += [(f"mesh.{k}", _fmt(v)) for k, v in sorted(self.mesh.items())]
        for key in ("form", "limiter", "momentum", "tol_wet", "g", "dt", "cfl", "dt_floor",
                    "cfl_metric", "t_end", "max_steps", "output", "snapshot_interval",
                    "snapshot_format", "diagnostic_interval", "gauge_interval", "backend"):
            v = getattr(self, key)
            if v is not None:
                out.append((key, _fmt(v)))
        out += [(f"gauge.{k}", f"{_fmt(x)}, {_fmt(y)}") for k, (x, y) in self.gauges.items()]
        out += [(f"section.{s.name}", f"{s.axis} = {_fmt(s.value)}, {s.samples}")
                for s in self.sections]
        return out


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _coerce_param(text: str):
    """Scenario parameters: int, float, bool or string."""
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def read_pairs(text: str, source: str = "<config>") -> list[tuple[str, str]]:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def _parse_float(key, value):
    try:
        x = float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{key}: value must be finite")
    return x


def _parse_int(key, value):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


_SECTION = re.compile(r"^\s*([xy])\s*=\s*([^,]+?)\s*(?:,\s*(\d+)\s*)?$")


def parse_config(path=None, overrides=(), text: str | None = None) -> RunConfig:
    """Read a configuration file (or ``text``) and apply ``key=value``
    overrides; returns a fully resolved :class:`RunConfig`.

    A ``manifest.json`` written by a previous run is accepted as well.
    """
    pairs: list[tuple[str, str]] = []
    if path is not None:
        p = Path(path)
        try:
            content = p.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {p}: {e}") from None
        if p.suffix == ".json":
            try:
                pairs = [tuple(kv) for kv in json.loads(content)["config_pairs"]]
            except (ValueError, KeyError, TypeError):
                raise ConfigError(f"{p}: not a run manifest") from None
        else:
            pairs = read_pairs(content, str(p))
    elif text is not None:
        pairs = read_pairs(text)
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r}: expected key=value")
        k, v = ov.split("=", 1)
        pairs.append((k.strip(), v.strip()))

    raw: dict[str, str] = {}
    for k, v in pairs:
        raw[k] = v            # later entries (overrides) win
    return _resolve(raw)


def _resolve(raw: dict) -> RunConfig:
    if "scenario" not in raw or not raw["scenario"]:
        raise ConfigError("missing required key 'scenario'")
    name = raw["scenario"]
    if name not in SCENARIOS:
        raise ConfigError(f"scenario: unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    if "dt" in raw and "cfl" in raw:
        raise ConfigError("dt and cfl are mutually exclusive")

    known = set(ENUMS) | set(FLOATS) | set(INTS) | set(PLAIN)
    vals: dict = {}
    sparams: dict = {}
    gauges: dict = {}
    sections: list = []
    for key, value in raw.items():
        if key.startswith("scenario."):
            sparams[key.split(".", 1)[1]] = _coerce_param(value)
        elif key.startswith("gauge."):
            parts = [s for s in re.split(r"[,\s]+", value) if s]
            if len(parts) != 2:
                raise ConfigError(f"{key}: expected 'x, y', got {value!r}")
            gauges[key.split(".", 1)[1]] = (_parse_float(key, parts[0]),
                                            _parse_float(key, parts[1]))
        elif key.startswith("section."):
            m = _SECTION.match(value)
            if not m:
                raise ConfigError(f"{key}: expected 'y = value[, samples]', got {value!r}")
            samples = int(m.group(3)) if m.group(3) else 3
            if samples < 2:
                raise ConfigError(f"{key}: need at least 2 samples per cell")
            sections.append(Section(key.split(".", 1)[1], m.group(1),
                                    _parse_float(key, m.group(2)), samples))
        elif key not in known:
            raise ConfigError(f"unknown key {key!r}")
        elif key in ENUMS:
            if value not in ENUMS[key]:
                raise ConfigError(f"{key}: invalid value {value!r}; expected one of {ENUMS[key]}")
            vals[key] = value
        elif key in FLOATS:
            vals[key] = _parse_float(key, value)
        elif key in INTS:
            vals[key] = _parse_int(key, value)
        else:
            vals[key] = value

    try:
        spec = _make(name, sparams, vals.get("g"))
    except TypeError as e:
        raise ConfigError(f"scenario.*: {e}") from None
    except ValueError as e:
        raise ConfigError(f"scenario.*: {e}") from None

    cfg = RunConfig(scenario=name, scenario_params=sparams)
    cfg.tol_wet = vals.get("tol_wet", spec.tol_wet)
    cfg.g = vals.get("g", spec.g)
    cfg.t_end = vals.get("t_end", spec.t_end)
    if "cfl" in vals:
        cfg.cfl = vals["cfl"]
    else:
        cfg.dt = vals.get("dt", spec.dt)
        if cfg.dt is None:
            raise ConfigError("no time step: set dt or cfl")
    for key in ("form", "limiter", "momentum", "snapshot_format", "cfl_metric", "backend",
                "dt_floor", "max_steps", "snapshot_interval", "diagnostic_interval",
                "gauge_interval", "output"):
        if key in vals:
            setattr(cfg, key, vals[key])
    cfg.mesh_file = vals.get("mesh.file")
    cfg.mesh = {k.split(".", 1)[1]: vals[k] for k in ("mesh.nx", "mesh.ny", "mesh.split",
                                                      "mesh.levels") if k in vals}
    cfg.gauges = gauges if gauges else (dict(CONICAL_GAUGES) if name == "conical_island" else {})
    cfg.sections = sections

    if not cfg.tol_wet > 0:
        raise ConfigError(f"tol_wet: must be positive, got {cfg.tol_wet!r}")
    if not cfg.g > 0:
        raise ConfigError("g: must be positive")
    if cfg.dt is not None and not cfg.dt > 0:
        raise ConfigError("dt: must be positive")
    if cfg.cfl is not None and not cfg.cfl > 0:
        raise ConfigError("cfl: must be positive")
    if cfg.dt_floor is not None and cfg.dt_floor < 0:
        raise ConfigError("dt_floor: must be nonnegative")
    if not cfg.t_end > 0:
        raise ConfigError("t_end: must be positive")
    for key in ("diagnostic_interval", "gauge_interval"):
        if getattr(cfg, key) < 1:
            raise ConfigError(f"{key}: must be >= 1")
    if cfg.snapshot_interval < 0:
        raise ConfigError("snapshot_interval: must be >= 0")
    if cfg.max_steps is not None and cfg.max_steps < 1:
        raise ConfigError("max_steps: must be >= 1")
    for k in ("nx", "ny"):
        if k in cfg.mesh and cfg.mesh[k] < 1:
            raise ConfigError(f"mesh.{k}: must be >= 1")
    if cfg.mesh.get("levels", 0) < 0:
        raise ConfigError("mesh.levels: must be >= 0")
    for gid, (x, y) in cfg.gauges.items():
        if not spec.inside(x, y):
            raise ConfigError(f"gauge.{gid}: point ({x}, {y}) lies outside the domain")
    return cfg


def _make(name: str, params: dict, g=None) -> ScenarioSpec:
    # keep the scenario's exact solution consistent with the solver's g
    if g is not None and "g" not in params and "g" in _ctor_params(name):
        params = {**params, "g": g}
    return make_scenario(name, **params)


def _ctor_params(name: str):
    import inspect
    return inspect.signature(SCENARIOS[name]).parameters
