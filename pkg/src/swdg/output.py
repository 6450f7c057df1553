"""Snapshots, cross-sections, gauges and CSV helpers.

Every float is written with 17 significant digits so files read back to
the identical binary value.
"""
from __future__ import annotations

import logging
import warnings
from pathlib import Path

import numpy as np

from .mesh import Mesh, locate
from .wetdry import nodal_velocity

log = logging.getLogger(__name__)

FLOAT_FMT = "%.17g"


def fmt_float(x) -> str:
    return FLOAT_FMT % x


def write_csv(path, header, columns, int_columns=()) -> None:
    """Write equal-length columns; names in ``int_columns`` are integers."""
    cols = [np.asarray(c) for c in columns]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("columns differ in length")
    fmts = ["%d" if name in int_columns else "%s" if cols[k].dtype.kind in "US" else FLOAT_FMT
            for k, name in enumerate(header)]
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for i in range(n):
            f.write(",".join(fm % c[i] for fm, c in zip(fmts, cols)) + "\n")


def read_csv(path) -> dict:
    """Read a CSV written by this module into a dict of float arrays
    (string columns stay strings)."""
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:] if ln]
    out = {}
    for k, name in enumerate(header):
        vals = [r[k] for r in rows]
        try:
            out[name] = np.array([float(v) for v in vals])
        except ValueError:
            out[name] = np.array(vals)
    return out


# ---------------------------------------------------------------------------
# snapshots

SNAPSHOT_COLUMNS = ("cell", "node", "x", "y", "b", "h", "hu", "hv", "u", "v", "wet")


def snapshot_columns(field, bathymetry, mesh: Mesh, tol_wet: float = 1e-6) -> dict:
    U = np.asarray(field, dtype=float)
    b = np.asarray(bathymetry, dtype=float)
    if b.ndim == 1:
        b = b[mesh.cells]
    nc = mesh.n_cells
    xy = mesh.node_coords.reshape(-1, 2)
    h, hu, hv = (U[k].ravel() for k in range(3))
    return {
        "cell": np.repeat(np.arange(nc), 3),
        "node": np.tile(np.arange(3), nc),
        "x": xy[:, 0], "y": xy[:, 1], "b": b.ravel(),
        "h": h, "hu": hu, "hv": hv,
        "u": nodal_velocity(h, hu, tol_wet), "v": nodal_velocity(h, hv, tol_wet),
        "wet": (h >= tol_wet).astype(int),
    }


def write_snapshot(field, bathymetry, mesh: Mesh, t: float, path, fmt: str = "csv",
                   tol_wet: float = 1e-6) -> Path:
    """Write one field snapshot.

    ``csv``: one row per (cell, node).  ``vtk``: legacy ASCII unstructured
    grid with three private points per cell, so the discontinuous field is
    shown as is.  Returns the path written.
    """
    cols = snapshot_columns(field, bathymetry, mesh, tol_wet)
    path = Path(path)
    if fmt == "csv":
        write_csv(path, SNAPSHOT_COLUMNS, [cols[c] for c in SNAPSHOT_COLUMNS],
                  int_columns=("cell", "node", "wet"))
    elif fmt == "vtk":
        _write_vtk(path, cols, mesh.n_cells, t)
    else:
        raise ValueError(f"unknown snapshot format {fmt!r}")
    return path


def _write_vtk(path, cols, nc, t):
    npts = 3 * nc
    f = FLOAT_FMT
    out = ["# vtk DataFile Version 3.0", f"swdg snapshot t={fmt_float(t)}", "ASCII",
           "DATASET UNSTRUCTURED_GRID",
           "FIELD FieldData 1", "TIME 1 1 double", fmt_float(t),
           f"POINTS {npts} double"]
    out += [f"{f} {f} 0" % (x, y) for x, y in zip(cols["x"], cols["y"])]
    out.append(f"CELLS {nc} {4 * nc}")
    out += [f"3 {3 * c} {3 * c + 1} {3 * c + 2}" for c in range(nc)]
    out.append(f"CELL_TYPES {nc}")
    out += ["5"] * nc
    out.append(f"POINT_DATA {npts}")
    for name in ("h", "b", "hu", "hv"):
        out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        out += [fmt_float(v) for v in cols[name]]
    out += ["SCALARS H double 1", "LOOKUP_TABLE default"]
    out += [fmt_float(v) for v in cols["h"] + cols["b"]]
    out += ["SCALARS wet int 1", "LOOKUP_TABLE default"]
    out += [str(v) for v in cols["wet"]]
    out.append("VECTORS velocity double")
    out += [f"{f} {f} 0" % (u, v) for u, v in zip(cols["u"], cols["v"])]
    Path(path).write_text("\n".join(out) + "\n")


def read_snapshot(path) -> dict:
    return read_csv(path)


# ---------------------------------------------------------------------------
# cross-sections

TRACE_COLUMNS = ("s", "cell", "x", "y", "h", "hu", "hv", "u", "v")


def extract_cross_section(field, mesh: Mesh, line, samples: int = 3, tol_wet: float = 1e-6,
                          bathymetry=None) -> dict:
    """Sample the P1 field along ``line = ("y", c)`` or ``("x", c)``.

    For every cell the line crosses, ``samples`` equispaced points from the
    entry to the exit abscissa are evaluated with that cell's own linear
    function, so a discontinuity at an edge appears as two records with the
    same abscissa.  Records are sorted by abscissa (ties by cell index).
    Returns a dict of arrays (keys ``s``, ``cell``, ``x``, ``y``, ``h``,
    ``hu``, ``hv``, ``u``, ``v`` and ``b`` when bathymetry is given) plus
    ``entry``/``exit`` per sampled record.
    """
    axis, value = line
    if axis not in ("x", "y"):
        raise ValueError("line must be ('x', value) or ('y', value)")
    if samples < 2:
        raise ValueError("need at least 2 samples per cell")
    U = np.asarray(field, dtype=float)
    P = mesh.node_coords
    fixed = 1 if axis == "y" else 0       # coordinate held constant
    free = 1 - fixed
    span = np.ptp(mesh.vertices, axis=0).max()
    eps = 1e-12 * span

    c_list, s_list, lam_list, entry_l, exit_l = [], [], [], [], []
    for c in range(mesh.n_cells):
        p = P[c]
        d = p[:, fixed] - value
        if d.min() > eps or d.max() < -eps:
            continue
        pts = []
        for k in range(3):
            a, b = k, (k + 1) % 3
            if abs(d[a]) <= eps:
                pts.append(p[a, free])
            if (d[a] < -eps and d[b] > eps) or (d[a] > eps and d[b] < -eps):
                r = d[a] / (d[a] - d[b])
                pts.append(p[a, free] + r * (p[b, free] - p[a, free]))
        if not pts:
            continue
        s0, s1 = min(pts), max(pts)
        if s1 - s0 <= eps:
            continue                      # touches at a single vertex
        T = np.array([[p[0, 0] - p[2, 0], p[1, 0] - p[2, 0]],
                      [p[0, 1] - p[2, 1], p[1, 1] - p[2, 1]]])
        Tinv = np.linalg.inv(T)
        for s in np.linspace(s0, s1, samples):
            q = np.empty(2)
            q[free], q[fixed] = s, value
            l01 = Tinv @ (q - p[2])
            lam_list.append((l01[0], l01[1], 1.0 - l01[0] - l01[1]))
            c_list.append(c)
            s_list.append(s)
            entry_l.append(s0)
            exit_l.append(s1)

    if not c_list:
        warnings.warn(f"cross-section {axis}={value} does not intersect the mesh",
                      RuntimeWarning, stacklevel=2)
        empty = {k: np.zeros(0) for k in TRACE_COLUMNS + ("entry", "exit")}
        empty["cell"] = np.zeros(0, dtype=np.int64)
        if bathymetry is not None:
            empty["b"] = np.zeros(0)
        return empty

    cells = np.asarray(c_list, dtype=np.int64)
    s = np.asarray(s_list)
    lam = np.asarray(lam_list)
    order = np.lexsort((cells, s))
    cells, s, lam = cells[order], s[order], lam[order]
    vals = [(U[k, cells] * lam).sum(axis=1) for k in range(3)]
    h = vals[0]
    out = {"s": s, "cell": cells}
    xy = np.empty((len(s), 2))
    xy[:, free], xy[:, fixed] = s, value
    out["x"], out["y"] = xy[:, 0], xy[:, 1]
    out["h"], out["hu"], out["hv"] = vals
    out["u"] = nodal_velocity(h, vals[1], tol_wet)
    out["v"] = nodal_velocity(h, vals[2], tol_wet)
    out["entry"] = np.asarray(entry_l)[order]
    out["exit"] = np.asarray(exit_l)[order]
    if bathymetry is not None:
        b = np.asarray(bathymetry, dtype=float)
        if b.ndim == 1:
            b = b[mesh.cells]
        out["b"] = (b[cells] * lam).sum(axis=1)
    return out


def write_cross_section(trace: dict, path) -> Path:
    names = ["s", "entry", "exit", "cell", "x", "y"] + (["b"] if "b" in trace else []) \
        + ["h", "hu", "hv", "u", "v"]
    write_csv(path, names, [trace[n] for n in names], int_columns=("cell",))
    return Path(path)


# ---------------------------------------------------------------------------
# gauges

class Gauges:
    """Point gauges located once; values by linear interpolation in the
    containing cell (lowest index when a point lies on shared edges)."""

    def __init__(self, mesh: Mesh, points: dict, rest_level: float = 0.0,
                 tol_wet: float = 1e-6):
        self.names = list(points)
        self.xy = np.array([points[n] for n in self.names], dtype=float).reshape(-1, 2)
        self.rest_level = rest_level
        self.tol_wet = tol_wet
        self.cells = locate(mesh, self.xy) if len(self.names) else np.zeros(0, dtype=np.int64)
        missing = [n for n, c in zip(self.names, self.cells) if c < 0]
        if missing:
            raise ValueError(f"gauges outside the mesh: {', '.join(missing)}")
        P = mesh.node_coords
        lam = []
        for c, q in zip(self.cells, self.xy):
            p = P[c]
            T = np.array([[p[0, 0] - p[2, 0], p[1, 0] - p[2, 0]],
                          [p[0, 1] - p[2, 1], p[1, 1] - p[2, 1]]])
            l01 = np.linalg.solve(T, q - p[2])
            lam.append((l01[0], l01[1], 1.0 - l01[0] - l01[1]))
        self.lam = np.array(lam).reshape(-1, 3)

    def sample(self, field, bathymetry_nodal) -> dict:
        """Elevation ``H - rest_level``, depth and velocity at each gauge."""
        U = np.asarray(field)
        vals = [(U[k, self.cells] * self.lam).sum(axis=1) for k in range(3)]
        b = (bathymetry_nodal[self.cells] * self.lam).sum(axis=1)
        h = vals[0]
        return {"eta": h + b - self.rest_level, "h": h,
                "u": nodal_velocity(h, vals[1], self.tol_wet),
                "v": nodal_velocity(h, vals[2], self.tol_wet)}


class GaugeWriter:
    """Streams gauge samples to ``gauges.csv`` (long format, one row per
    gauge and time stamp)."""

    header = ("time", "gauge", "x", "y", "eta", "h", "u", "v")

    def __init__(self, path, gauges: Gauges):
        self.gauges = gauges
        self.f = open(path, "w")
        self.f.write(",".join(self.header) + "\n")
        self.last_t = -np.inf

    def write(self, t: float, field, bathymetry_nodal):
        if t <= self.last_t:
            return
        self.last_t = t
        s = self.gauges.sample(field, bathymetry_nodal)
        for i, name in enumerate(self.gauges.names):
            x, y = self.gauges.xy[i]
            self.f.write(",".join([fmt_float(t), name, fmt_float(x), fmt_float(y)]
                                  + [fmt_float(s[k][i]) for k in ("eta", "h", "u", "v")])
                         + "\n")

    def close(self):
        self.f.close()
