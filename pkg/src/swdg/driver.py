"""Batch driver: run a configured scenario and write its artifacts."""
from __future__ import annotations

import json
import logging
import os
import platform
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig
from .mesh import MeshError, load_mesh
from .output import (GaugeWriter, Gauges, extract_cross_section, fmt_float,
                     write_cross_section, write_snapshot)
from .scenarios import error_norms, total_energy, total_mass
from .timestep import Solver, SolverAbort, StepControl, courant_number

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3

THREADS_ENV = "SWDG_NUM_THREADS"

DIAG_COLUMNS = ("step", "time", "dt", "mass", "mass_drift", "energy", "energy_drift",
                "max_courant", "min_h", "min_stage_h", "n_gravity_off")
ERROR_COLUMNS = ("l2_h", "linf_h", "linf_hu", "linf_hv", "linf_m")


def _mesh_for(cfg: RunConfig, spec):
    if cfg.mesh_file:
        try:
            return load_mesh(cfg.mesh_file)
        except OSError as e:
            raise ConfigError(f"mesh.file: cannot read {cfg.mesh_file}: {e}") from None
        except MeshError as e:
            raise ConfigError(f"mesh.file: {e}") from None
    try:
        return spec.build_mesh(**cfg.mesh)
    except MeshError as e:
        raise ConfigError(f"mesh: {e}") from None


def _prepare_output(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise ConfigError(f"output: directory {out} is not writable: {e}") from None
    return out


def run(cfg: RunConfig) -> int:
    """Execute ``cfg``; returns the process exit status (0, 2 or 3).

    Writes ``diagnostics.csv``, ``gauges.csv``, snapshots, cross-sections
    and ``manifest.json`` into ``cfg.output``.
    """
    try:
        return _run(cfg)
    except ConfigError as e:
        log.error("configuration error: %s", e)
        return EXIT_CONFIG


def _run(cfg: RunConfig) -> int:
    spec = cfg.build_scenario()
    mesh = _mesh_for(cfg, spec)
    out = _prepare_output(cfg.output)
    b = spec.bathymetry_at(mesh)
    try:
        gauges = Gauges(mesh, cfg.gauges, rest_level=spec.rest_level, tol_wet=cfg.tol_wet)
    except ValueError as e:
        raise ConfigError(f"gauge: {e}") from None
    control = StepControl(dt=cfg.dt, cfl=cfg.cfl, dt_floor=cfg.dt_floor)
    solver = Solver(mesh, b, g=cfg.g, tol_wet=cfg.tol_wet, form=cfg.form,
                    variant=cfg.limiter, momentum=cfg.momentum, inflow=spec.inflow,
                    cfl_metric=cfg.cfl_metric, backend=cfg.backend)
    bn = solver.b
    U0 = spec.initial_field(mesh)
    exact = spec.exact if spec.has_exact else None
    threads = os.environ.get(THREADS_ENV)

    outputs = ["diagnostics.csv", "gauges.csv"]
    diag = open(out / "diagnostics.csv", "w")
    diag.write(",".join(DIAG_COLUMNS + (ERROR_COLUMNS if exact else ())) + "\n")
    gw = GaugeWriter(out / "gauges.csv", gauges)
    state = {"mass0": None, "energy0": None, "last": -1}

    def snapshot(step, t, U):
        name = f"snapshot_{step:06d}.{cfg.snapshot_format}"
        write_snapshot(U, bn, mesh, t, out / name, cfg.snapshot_format, cfg.tol_wet)
        outputs.append(name)
        for sec in cfg.sections:
            tr = extract_cross_section(U, mesh, (sec.axis, sec.value), sec.samples,
                                       cfg.tol_wet, bathymetry=bn)
            sname = f"section_{sec.name}_{step:06d}.csv"
            write_cross_section(tr, out / sname)
            outputs.append(sname)

    def diagnostics(step, t, U, dt):
        mass = total_mass(U, mesh)
        energy = total_energy(U, bn, mesh, cfg.g, cfg.tol_wet)
        if state["mass0"] is None:
            state["mass0"], state["energy0"] = mass, energy
        m0, e0 = state["mass0"], state["energy0"]
        row = [step, t, dt, mass, (mass - m0) / m0 if m0 else mass - m0,
               energy, (energy - e0) / abs(e0) if e0 else energy - e0,
               courant_number(U, solver.radius, dt, cfg.g, cfg.tol_wet),
               float(U[0].min()), solver.min_stage_h,
               solver.op.flags(U).n_gravity_off]
        if exact:
            err = error_norms(U, exact, mesh, t)
            row += [err["h"]["l2"], err["h"]["linf"], err["hu"]["linf"], err["hv"]["linf"],
                    max(err["hu"]["linf"], err["hv"]["linf"])]
        diag.write(",".join(str(v) if isinstance(v, (int, np.integer)) else fmt_float(v)
                            for v in row) + "\n")

    def observer(step, t, U, dt):
        if step % cfg.diagnostic_interval == 0:
            diagnostics(step, t, U, dt)
        if step % cfg.gauge_interval == 0:
            gw.write(t, U, bn)
        if step == 0 or (cfg.snapshot_interval and step % cfg.snapshot_interval == 0):
            snapshot(step, t, U)
        state["last"] = step
        state["U"], state["t"], state["dt"] = U, t, dt

    status, reason, message = "ok", None, None
    t_start = time.perf_counter()
    steps, t_final = 0, 0.0
    try:
        res = solver.run(U0, cfg.t_end, control, observer=observer, max_steps=cfg.max_steps)
        steps, t_final = res.steps, res.t
    except SolverAbort as e:
        status, reason, message = "aborted", e.reason, str(e)
        steps, t_final = max(state["last"], 0), state.get("t", 0.0)
        log.error("solver abort (%s): %s", e.reason, e)
    finally:
        # close the series with the last accepted state
        if "U" in state:
            step, t, U, dt = state["last"], state["t"], state["U"], state["dt"]
            if step % cfg.diagnostic_interval:
                diagnostics(step, t, U, dt)
            if step % cfg.gauge_interval:
                gw.write(t, U, bn)
            if step and not (cfg.snapshot_interval and step % cfg.snapshot_interval == 0):
                snapshot(step, t, U)
        diag.close()
        gw.close()

    manifest = {
        "package": "swdg", "version": __version__,
        "status": status, "reason": reason, "message": message,
        "steps": steps, "t_final": t_final,
        "wall_time_s": round(time.perf_counter() - t_start, 3),
        "config": cfg.to_dict(),
        "config_pairs": cfg.to_pairs(),
        "mesh": {"cells": mesh.n_cells, "vertices": mesh.n_vertices, "edges": mesh.n_edges},
        "outputs": outputs,
        "environment": {"python": platform.python_version(), "numpy": np.__version__,
                        "threads_hint": threads},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return EXIT_OK if status == "ok" else EXIT_ABORT
