"""Heun time integration with per-stage limiting and CFL control."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dg import G, DGOperator, InflowSpec
from .limiter import PositivityError, apply_limiter
from .mesh import Mesh, cfl_radius
from .wetdry import nodal_velocity

log = logging.getLogger(__name__)

# reference values for RKDG2: operational 2D limit and positivity-in-the-mean limit
CFL_2D = 0.233
CFL_POSITIVITY = 1.0 / 3.0


class SolverAbort(RuntimeError):
    """The run cannot continue; ``reason`` is a short machine-readable code."""

    def __init__(self, message: str, reason: str = "abort", t: float = float("nan"),
                 step: int = -1):
        super().__init__(message)
        self.reason = reason
        self.t = t
        self.step = step


class DtFloorError(SolverAbort):
    pass


@dataclass(frozen=True)
class StepControl:
    """Fixed step (``dt``) or adaptive step with target Courant number (``cfl``).

    ``dt_floor`` is absolute; when omitted it is ``dt_floor_factor`` times the
    first step.
    """

    dt: float | None = None
    cfl: float | None = None
    dt_floor: float | None = None
    dt_floor_factor: float = 1e-9

    def __post_init__(self):
        if (self.dt is None) == (self.cfl is None):
            raise ValueError("exactly one of dt and cfl must be given")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if self.cfl is not None and not self.cfl > 0:
            raise ValueError(f"cfl must be positive, got {self.cfl!r}")
        if self.dt_floor is not None and self.dt_floor < 0:
            raise ValueError("dt_floor must be nonnegative")

    @property
    def adaptive(self) -> bool:
        return self.cfl is not None


def wave_speed(U, g: float = G, tol_wet: float = 1e-6):
    """Per-cell maximum nodal ``|u| + sqrt(g h)`` with the dry-node convention."""
    h = np.maximum(U[0], 0.0)
    u = nodal_velocity(h, U[1], tol_wet)
    v = nodal_velocity(h, U[2], tol_wet)
    return (np.hypot(u, v) + np.sqrt(g * h)).max(axis=1)


def courant_number(U, radius, dt: float, g: float = G, tol_wet: float = 1e-6,
                   per_cell: bool = False):
    """Maximum Courant number ``dt * c_max / radius`` (and per-cell values)."""
    c = dt * wave_speed(U, g, tol_wet) / radius
    return (float(c.max()), c) if per_cell else float(c.max())


def adaptive_dt(U, radius, cfl_target: float, g: float = G, tol_wet: float = 1e-6,
                dt_floor: float = 0.0) -> float:
    """Largest step with Courant number ``cfl_target``; cells at rest and dry
    cells (zero wave speed) are ignored."""
    if not cfl_target > 0:
        raise ValueError("cfl_target must be positive")
    c = wave_speed(U, g, tol_wet)
    moving = c > 0
    if not moving.any():
        raise SolverAbort("no cell has a nonzero wave speed; cannot choose dt",
                          reason="no_wave_speed")
    dt = cfl_target * float((radius[moving] / c[moving]).min())
    if dt < dt_floor:
        raise DtFloorError(
            f"adaptive dt {dt:.3e} fell below the floor {dt_floor:.3e} "
            "(spurious-velocity collapse near the shoreline)", reason="dt_floor")
    return dt


@dataclass
class RunResult:
    U: np.ndarray
    t: float
    steps: int
    dt: list = field(default_factory=list)
    min_stage_h: float = np.inf


class Solver:
    """Bundles the spatial operator, limiter settings and CFL radii."""

    def __init__(self, mesh: Mesh, bathymetry, g: float = G, tol_wet: float = 1e-6,
                 form: str = "strong", variant: str = "vertex",
                 momentum: str = "velocity", inflow: InflowSpec | None = None,
                 cfl_metric: str = "patch", backend: str = "numba"):
        self.mesh = mesh
        self.backend = backend
        self.g = g
        self.tol_wet = tol_wet
        self.variant = variant
        self.momentum = momentum
        self.op = DGOperator(mesh, bathymetry, g=g, tol_wet=tol_wet, form=form,
                             inflow=inflow, backend=backend)
        self.b = self.op.b
        self.radius = cfl_radius(mesh, cfl_metric)
        self.stencil = mesh.stencil(variant)
        self.min_stage_h = np.inf

    def limit(self, U):
        out = apply_limiter(U, self.b, self.mesh, self.variant, self.tol_wet,
                            self.momentum, self.backend)
        self.min_stage_h = min(self.min_stage_h, float(out[0].min()))
        return out

    def rhs(self, U, t: float):
        return self.op.rhs(U, t, self.op.flags(U))

    def heun_step(self, U, t: float, dt: float):
        U1 = self.limit(U + dt * self.rhs(U, t))
        return self.limit(0.5 * U + 0.5 * (U1 + dt * self.rhs(U1, t + dt)))

    def courant(self, U, dt: float) -> float:
        return courant_number(U, self.radius, dt, self.g, self.tol_wet)

    def run(self, U0, t_end: float, control: StepControl, t0: float = 0.0,
            observer: Callable | None = None, max_steps: int | None = None,
            limit_initial: bool = True) -> RunResult:
        """Integrate from ``t0`` to ``t_end``.

        ``observer(step, t, U, dt)`` is called for the initial state (with
        ``dt`` the first step size) and after every step.  Limiter positivity
        failures and step-size collapse raise :class:`SolverAbort`.
        """
        U = self.limit(U0) if limit_initial else np.array(U0, dtype=float)
        t = t0
        res = RunResult(U=U, t=t, steps=0)
        if control.adaptive:
            dt0 = adaptive_dt(U, self.radius, control.cfl, self.g, self.tol_wet)
        else:
            dt0 = control.dt
        floor = control.dt_floor if control.dt_floor is not None \
            else control.dt_floor_factor * dt0
        if observer is not None:
            observer(0, t, U, dt0)
        n = 0
        span = t_end - t0
        while t < t_end - 1e-12 * max(abs(span), 1.0):
            if max_steps is not None and n >= max_steps:
                break
            if control.adaptive:
                try:
                    dt = adaptive_dt(U, self.radius, control.cfl, self.g,
                                     self.tol_wet, floor)
                except SolverAbort as e:
                    e.t, e.step = t, n
                    raise
                res.dt.append(dt)
            else:
                dt = control.dt
            dt = min(dt, t_end - t)
            try:
                U = self.heun_step(U, t, dt)
            except PositivityError as e:
                raise SolverAbort(f"step {n + 1} at t={t:.6g}: {e}", reason="positivity",
                                  t=t, step=n + 1) from e
            n += 1
            # fixed steps: avoid accumulating round-off in t
            t = t0 + n * control.dt if not control.adaptive and t + dt < t_end else t + dt
            if observer is not None:
                observer(n, t, U, dt)
        res.U, res.t, res.steps, res.min_stage_h = U, t, n, self.min_stage_h
        return res


def heun_step(U, t: float, dt: float, solver: Solver):
    """One limited Heun step of ``solver``'s discretization."""
    return solver.heun_step(U, t, dt)
