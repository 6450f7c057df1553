"""Benchmark setups, closed-form solutions and solution diagnostics."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dg import G, InflowSpec, nodal_field
from .mesh import Mesh, build_uniform_mesh
from .wetdry import nodal_velocity

# exact(x, y, t) -> (h, u, v) arrays
ExactFn = Callable[[np.ndarray, np.ndarray, float], tuple]


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything needed to set up a benchmark run.

    ``bathymetry(x, y)`` and ``initial(x, y) -> (h, u, v)`` are evaluated at
    mesh vertices.  ``mesh`` holds the default keyword arguments for
    :func:`build_uniform_mesh`.
    """

    name: str
    domain: tuple
    bathymetry: Callable
    initial: Callable
    boundary: dict
    g: float = G
    tol_wet: float = 1e-6
    t_end: float = 1.0
    dt: float | None = None
    mesh: dict = field(default_factory=dict)
    exact: ExactFn | None = None
    inflow: InflowSpec | None = None
    rest_level: float = 0.0
    period: float | None = None
    params: dict = field(default_factory=dict)

    @property
    def has_exact(self) -> bool:
        return self.exact is not None

    def build_mesh(self, **overrides) -> Mesh:
        kw = {"nx": 16, "ny": 16, "split": "two", "levels": 0}
        kw.update(self.mesh)
        kw.update(overrides)
        return build_uniform_mesh(self.domain, boundary=self.boundary, **kw)

    def bathymetry_at(self, mesh: Mesh) -> np.ndarray:
        x, y = mesh.vertices.T
        return np.asarray(self.bathymetry(x, y), dtype=float) * np.ones(len(x))

    def initial_field(self, mesh: Mesh) -> np.ndarray:
        x, y = mesh.vertices.T
        h, u, v = (np.broadcast_to(np.asarray(a, dtype=float), x.shape)
                   for a in self.initial(x, y))
        if np.any(h < 0):
            raise ValueError(f"scenario {self.name}: negative initial depth")
        return nodal_field(mesh, h, np.where(h > 0, u, 0.0), np.where(h > 0, v, 0.0))

    def exact_field(self, mesh: Mesh, t: float) -> np.ndarray:
        """Nodal interpolant of the exact solution (conserved variables)."""
        if self.exact is None:
            raise ValueError(f"scenario {self.name} has no exact solution")
        x, y = mesh.node_coords.reshape(-1, 2).T
        h, u, v = (np.broadcast_to(np.asarray(a, dtype=float), x.shape)
                   for a in self.exact(x, y, t))
        out = np.stack([h, h * u, h * v]).reshape(3, mesh.n_cells, 3)
        return out

    def inside(self, x, y) -> np.ndarray:
        x0, x1, y0, y1 = self.domain
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)


PERIODIC = {"left": "periodic", "right": "periodic", "bottom": "periodic", "top": "periodic"}
WALLS = {"left": "wall", "right": "wall", "bottom": "wall", "top": "wall"}


def _still(h):
    z = np.zeros_like(h)
    return h, z, z


# ---------------------------------------------------------------- lake at rest

def _b_mountain(x, y):
    return np.maximum(0.0, 0.25 - 5.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2))


def _b_steps(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    in1 = np.hypot(x - 0.35, y - 0.65) < 0.1
    in2 = np.hypot(x - 0.55, y - 0.45) < 0.1
    in3 = (np.abs(x - 0.47) < 0.25) & (np.abs(y - 0.55) < 0.25)
    in4 = np.hypot(x - 0.5, y - 0.5) < 0.45
    return np.select([in1, in2, in3, in4], [0.15, 0.05, 0.07, 0.03], 0.0)


def _lake(name, bathy, level, t_end, dt, nx):
    def initial(x, y):
        return _still(np.maximum(0.0, level - bathy(x, y)))

    def exact(x, y, t):
        return initial(x, y)

    return ScenarioSpec(
        name=name, domain=(0.0, 1.0, 0.0, 1.0), bathymetry=bathy, initial=initial,
        boundary=dict(PERIODIC), tol_wet=1e-6, t_end=t_end, dt=dt,
        mesh={"nx": nx, "ny": nx, "split": "four"}, exact=exact, rest_level=level,
        params={"level": level})


def lake_at_rest_1(level: float = 0.1, t_end: float = 40.0, dt: float = 0.002,
                   nx: int = 32) -> ScenarioSpec:
    """Still water around a partly emerged parabolic mountain, periodic unit square."""
    return _lake("lake_at_rest_1", _b_mountain, level, t_end, dt, nx)


def lake_at_rest_2(level: float = 0.1, t_end: float = 40.0, dt: float = 0.002,
                   nx: int = 32) -> ScenarioSpec:
    """Still water over four-level step bathymetry, interpolated at vertices."""
    return _lake("lake_at_rest_2", _b_steps, level, t_end, dt, nx)


# --------------------------------------------------------------- sloping beach

def beach_surface(x, alpha=0.1, L=5000.0, a1=0.006, a2=0.018, k1=0.4444, k2=4.0,
                  x1=4.1209, x2=1.6384):
    """Initial N-wave surface displacement (decaying Gaussians)."""
    xp = np.asarray(x, dtype=float) / L
    eta = a1 * np.exp(-k1 * (xp - x1) ** 2) - a2 * np.exp(-k2 * (xp - x2) ** 2)
    return alpha * L * eta


def sloping_beach_runup(alpha: float = 0.1, L: float = 5000.0, depth_ref: float = 5000.0,
                        t_end: float = 220.0, dt: float = 0.04,
                        dx: float = 50.0) -> ScenarioSpec:
    """N-wave runup onto a plane beach ``b = depth_ref - alpha x``.

    The still-water level is ``depth_ref`` (shoreline at x = 0), so the
    initial depth is ``max(0, eta + alpha x)``.
    """
    domain = (-400.0, 50000.0, 0.0, 400.0)

    def bathy(x, y):
        return depth_ref - alpha * np.asarray(x, dtype=float) + 0.0 * np.asarray(y)

    def initial(x, y):
        eta = beach_surface(x, alpha=alpha, L=L)
        return _still(np.maximum(0.0, depth_ref + eta - bathy(x, y)))

    nx = int(round((domain[1] - domain[0]) / dx))
    ny = int(round((domain[3] - domain[2]) / dx))
    return ScenarioSpec(
        name="sloping_beach_runup", domain=domain, bathymetry=bathy, initial=initial,
        boundary={"left": "wall", "right": "transparent",
                  "bottom": "periodic", "top": "periodic"},
        tol_wet=1e-2, t_end=t_end, dt=dt, mesh={"nx": nx, "ny": ny, "split": "two"},
        rest_level=depth_ref, params={"alpha": alpha, "L": L})


# -------------------------------------------------------------- Thacker bowls

def thacker_radial_params(H0: float = 1.0, r0: float = 2000.0, a: float = 2500.0,
                          g: float = G) -> dict:
    A = (a ** 4 - r0 ** 4) / (a ** 4 + r0 ** 4)
    omega = math.sqrt(8.0 * g * H0) / a
    return {"H0": H0, "r0": r0, "a": a, "A": A, "omega": omega,
            "period": 2.0 * math.pi / omega}


def thacker_radial(H0: float = 1.0, r0: float = 2000.0, a: float = 2500.0,
                   g: float = G, periods: float = 2.0, nx: int = 64) -> ScenarioSpec:
    """Radially symmetric oscillation in a paraboloid basin."""
    p = thacker_radial_params(H0, r0, a, g)
    A, omega, P = p["A"], p["omega"], p["period"]
    domain = (-4000.0, 4000.0, -4000.0, 4000.0)

    def bathy(x, y):
        return H0 * (np.asarray(x) ** 2 + np.asarray(y) ** 2) / a ** 2

    def exact(x, y, t):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if not np.all((np.abs(x) <= 4000.0) & (np.abs(y) <= 4000.0)):
            raise ValueError("query point outside the basin domain")
        c = 1.0 - A * math.cos(omega * t)
        r2 = x ** 2 + y ** 2
        h = np.maximum(0.0, H0 * (math.sqrt(1.0 - A ** 2) / c
                                  - r2 * (1.0 - A ** 2) / (a ** 2 * c ** 2)))
        s = omega * A * math.sin(omega * t) / (2.0 * c)
        wet = h > 0
        return h, np.where(wet, s * x, 0.0), np.where(wet, s * y, 0.0)

    return ScenarioSpec(
        name="thacker_radial", domain=domain, bathymetry=bathy,
        initial=lambda x, y: exact(x, y, 0.0), boundary=dict(WALLS), g=g,
        tol_wet=1e-6, t_end=periods * P, dt=P / 700.0,
        mesh={"nx": nx, "ny": nx, "split": "four"}, exact=exact, rest_level=0.0,
        period=P, params=p)


def thacker_planar(g: float = G, periods: float = 2.0, nx: int = 64) -> ScenarioSpec:
    """Rotating planar surface in a paraboloid basin."""
    omega = math.sqrt(0.2 * g)
    P = 2.0 * math.pi / omega
    domain = (-2.0, 2.0, -2.0, 2.0)

    def bathy(x, y):
        return 0.1 * (np.asarray(x) ** 2 + np.asarray(y) ** 2)

    def exact(x, y, t):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        wt = omega * t
        h = np.maximum(0.0, 0.1 * (x * math.cos(wt) + y * math.sin(wt) + 0.75) - bathy(x, y))
        wet = h > 0
        return (h, np.where(wet, -0.5 * omega * math.sin(wt), 0.0),
                np.where(wet, 0.5 * omega * math.cos(wt), 0.0))

    return ScenarioSpec(
        name="thacker_planar", domain=domain, bathymetry=bathy,
        initial=lambda x, y: exact(x, y, 0.0), boundary=dict(WALLS), g=g,
        tol_wet=1e-3, t_end=periods * P, dt=P / 1000.0 * (64.0 / nx),
        mesh={"nx": nx, "ny": nx, "split": "two"}, exact=exact, rest_level=0.0,
        period=P, params={"omega": omega, "period": P})


# ------------------------------------------------------------- conical island

CONICAL_CASES = {"A": {"a": 0.014, "T": 8.85, "x0": 5.76},
                 "C": {"a": 0.057, "T": 7.77, "x0": 7.56}}

# standard wave-gauge positions around the island (m)
CONICAL_GAUGES = {"g6": (9.36, 13.80), "g9": (10.36, 13.80),
                  "g16": (12.96, 11.22), "g22": (15.56, 13.80)}


def solitary_params(a: float, h0: float, g: float = G) -> dict:
    return {"K": math.sqrt(3.0 * a / (4.0 * h0 ** 3)),
            "c": math.sqrt(g * h0) * (1.0 + a / (2.0 * h0))}


def conical_island(case: str = "A", h0: float = 0.32, g: float = G,
                   t_end: float = 20.0, closed: bool = False, nx: int = 1024,
                   ny: int | None = None) -> ScenarioSpec:
    """Solitary wave running up a conical island.

    With ``closed=True`` all sides are walls and the solitary wave starts
    inside the domain (peak at ``x0``, simple-wave velocity) instead of
    entering through the left boundary.
    """
    case = str(case).upper()
    if case not in CONICAL_CASES:
        raise ValueError(f"unknown conical-island case {case!r} (expected A or C)")
    cp = CONICAL_CASES[case]
    a, T, x0 = cp["a"], cp["T"], cp["x0"]
    sp = solitary_params(a, h0, g)
    K, c = sp["K"], sp["c"]
    Lx, Ly = 25.92, 27.60
    xc, yc = Lx / 2, Ly / 2

    def bathy(x, y):
        r = np.hypot(np.asarray(x, dtype=float) - xc, np.asarray(y, dtype=float) - yc)
        return np.where(r <= 1.1, 0.625, np.where(r <= 3.6, (3.6 - r) / 4.0, 0.0))

    def depth(t):
        return h0 + a / math.cosh(K * (c * T - c * t - x0)) ** 2

    if closed:
        def initial(x, y):
            x = np.asarray(x, dtype=float)
            eta = a / np.cosh(K * (x - x0)) ** 2
            h = np.maximum(0.0, h0 + eta - bathy(x, y))
            u = 2.0 * (np.sqrt(g * (h0 + eta)) - math.sqrt(g * h0))
            return h, u, np.zeros_like(h)
        boundary, inflow = dict(WALLS), None
    else:
        def initial(x, y):
            return _still(np.maximum(0.0, h0 - bathy(x, y)))
        boundary = {"left": "inflow", "right": "transparent", "bottom": "wall", "top": "wall"}
        inflow = InflowSpec(depth=depth, h0=h0)

    return ScenarioSpec(
        name="conical_island", domain=(0.0, Lx, 0.0, Ly), bathymetry=bathy,
        initial=initial, boundary=boundary, g=g, tol_wet=1e-3, t_end=t_end,
        dt=0.0025 * 1024 / nx, mesh={"nx": nx, "ny": ny or nx, "split": "two"},
        inflow=inflow, rest_level=h0,
        params={"case": case, "a": a, "T": T, "x0": x0, "h0": h0, "K": K, "c": c,
                "closed": closed, "center": (xc, yc)})


SCENARIOS = {
    "lake_at_rest_1": lake_at_rest_1,
    "lake_at_rest_2": lake_at_rest_2,
    "sloping_beach_runup": sloping_beach_runup,
    "thacker_radial": thacker_radial,
    "thacker_planar": thacker_planar,
    "conical_island": conical_island,
}


def make_scenario(name: str, **params) -> ScenarioSpec:
    try:
        ctor = SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
    return ctor(**params)


# ----------------------------------------------------------------- diagnostics

def _quad_values(nodal):
    """Values of a P1 field at the three edge midpoints of each cell."""
    return 0.5 * (nodal + np.roll(nodal, -1, axis=-1))


def error_norms(field, exact, mesh: Mesh, t: float = 0.0) -> dict:
    """L2 and max-norm errors per conserved variable.

    ``exact`` is either a nodal field of shape (3, nc, 3) or a callable
    ``exact(x, y, t) -> (h, u, v)`` evaluated at the cell nodes.  The L2
    norm integrates the difference to the P1 interpolant of the exact
    solution.
    """
    if callable(exact):
        x, y = mesh.node_coords.reshape(-1, 2).T
        h, u, v = (np.broadcast_to(np.asarray(a, dtype=float), x.shape)
                   for a in exact(x, y, t))
        ref = np.stack([h, h * u, h * v]).reshape(3, mesh.n_cells, 3)
    else:
        ref = np.asarray(exact, dtype=float)
    err = np.asarray(field, dtype=float) - ref
    q = _quad_values(err)
    l2 = np.sqrt(((q ** 2).sum(axis=2) * mesh.area / 3.0).sum(axis=1))
    linf = np.abs(err).max(axis=(1, 2))
    return {name: {"l2": float(l2[k]), "linf": float(linf[k])}
            for k, name in enumerate(("h", "hu", "hv"))}


def convergence_rate(errors, dxs):
    """Pairwise rates ``log(e_c/e_f)/log(dx_c/dx_f)`` and the least-squares
    slope of ``log e`` against ``log dx``.

    Rates involving a zero (or negative) error are undefined and returned
    as ``nan`` with a warning.
    """
    e = np.asarray(errors, dtype=float)
    d = np.asarray(dxs, dtype=float)
    if e.shape != d.shape or e.size < 2:
        raise ValueError("need at least two matching errors and grid sizes")
    if np.any(np.diff(d) == 0) or not (np.all(np.diff(d) < 0) or np.all(np.diff(d) > 0)):
        raise ValueError("grid sizes must be strictly monotone")
    if np.any(d <= 0):
        raise ValueError("grid sizes must be positive")
    ok = e > 0
    if not ok.all():
        warnings.warn("zero error: convergence rate undefined", RuntimeWarning, stacklevel=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        le = np.where(ok, np.log(np.where(ok, e, 1.0)), np.nan)
    ld = np.log(d)
    rates = (le[:-1] - le[1:]) / (ld[:-1] - ld[1:])
    fitted = float(np.polyfit(ld, le, 1)[0]) if ok.all() else float("nan")
    return rates, fitted


def total_mass(field, mesh: Mesh) -> float:
    """Fluid volume: sum of cell area times mean depth."""
    return float((mesh.area * np.asarray(field)[0].mean(axis=1)).sum())


def total_energy(field, bathymetry, mesh: Mesh, g: float = G, tol_wet: float = 1e-6) -> float:
    """Integral of ``h |u|^2 / 2 + g h (h/2 + b)`` with the volume rule.

    ``bathymetry`` is per vertex or nodal per cell (nc, 3).
    """
    U = np.asarray(field, dtype=float)
    b = np.asarray(bathymetry, dtype=float)
    if b.ndim == 1:
        b = b[mesh.cells]
    h, mx, my = (_quad_values(U[k]) for k in range(3))
    bq = _quad_values(b)
    u = nodal_velocity(h, mx, tol_wet)
    v = nodal_velocity(h, my, tol_wet)
    dens = 0.5 * h * (u * u + v * v) + g * h * (0.5 * h + bq)
    return float((dens.sum(axis=1) * mesh.area / 3.0).sum())
