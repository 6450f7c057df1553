"""Limiting pipeline for wetting and drying.

Per Runge-Kutta stage the field passes through

1. Barth/Jespersen-type limiting of the total height ``H = h + b`` against
   the centroid range of an edge or vertex neighbourhood,
2. the positive-depth operator (in-cell mass redistribution), and
3. velocity-based limiting of each momentum component.

All operations are vectorized over cells.  Every per-cell pass reads the
pre-limit centroid values of all cells first, so the result does not depend
on cell ordering.
"""
from __future__ import annotations

import logging
from enum import Enum

import numpy as np

from . import _kernels
from .mesh import Mesh
from .wetdry import nodal_velocity

log = logging.getLogger(__name__)

# negative cell sums down to this fraction of the largest depth in the field
# are round-off from the flux balance, not a time-step violation
_ROUNDOFF = 1e-14


class LimiterVariant(str, Enum):
    EDGE_BASED = "edge"
    VERTEX_BASED = "vertex"


class PositivityError(RuntimeError):
    """A cell mean depth is negative; the time step violates the CFL bound."""


def _variant(variant) -> str:
    return LimiterVariant(variant).value


def neighborhood_bounds(values, stencil):
    """Min and max of per-cell ``values`` over each cell's stencil."""
    # column-wise reduction: much faster than a short-axis reduce
    lo = values[stencil[:, 0]].copy()
    hi = lo.copy()
    for j in range(1, stencil.shape[1]):
        col = values[stencil[:, j]]
        np.minimum(lo, col, out=lo)
        np.maximum(hi, col, out=hi)
    return lo, hi


def correction_factor(nodal, mean, lo, hi):
    """Barth/Jespersen factor ``alpha`` in [0, 1] per cell.

    ``nodal`` is (nc, 3); ``mean``, ``lo``, ``hi`` are (nc,).
    """
    d = nodal - mean[:, None]
    band = _kernels.DEV_BAND * np.maximum(np.abs(nodal), np.abs(mean)[:, None])
    up = d > band
    down = d < -band
    ratio = np.ones_like(d)
    with np.errstate(over="ignore"):        # huge ratios are clipped to 1 anyway
        np.divide((hi - mean)[:, None], d, out=ratio, where=up)
        np.divide((lo - mean)[:, None], d, out=ratio, where=down)
    return np.clip(ratio, 0.0, 1.0).min(axis=1)


def limit_total_height(h, b, stencil, return_alpha: bool = False):
    """Limit the total height and return the corresponding depth ``h_hat``.

    Cells whose factor is 1 keep their input depth bit for bit.
    """
    H = h + b
    Hc = H.mean(axis=1)
    lo, hi = neighborhood_bounds(Hc, stencil)
    alpha = correction_factor(H, Hc, lo, hi)
    H_hat = Hc[:, None] + alpha[:, None] * (H - Hc[:, None])
    h_hat = np.where((alpha == 1.0)[:, None], h, H_hat - b)
    return (h_hat, alpha) if return_alpha else h_hat


def positive_depth(h_hat, atol: float = 0.0):
    """Make nodal depths nonnegative while conserving each cell's sum.

    ``h_hat`` has shape (..., 3).  Raises :class:`PositivityError` if a cell
    mean is negative beyond round-off, i.e. below ``-1e-13`` times the
    cell's largest nodal magnitude and below ``-atol``.
    """
    h_hat = np.asarray(h_hat, dtype=float)
    single = h_hat.ndim == 1
    hh = np.atleast_2d(h_hat)
    out = hh.copy()
    neg = (hh < 0).any(axis=1)
    if np.any(neg):
        sub = hh[neg]
        total = sub.sum(axis=1)
        scale = np.abs(sub).max(axis=1)
        if np.any(total < -np.maximum(1e-13 * scale, 3.0 * atol)):
            bad = np.flatnonzero(neg)[np.argmin(total / np.maximum(scale, 1e-300))]
            raise PositivityError(
                f"negative mean depth {hh[bad].mean():.3e} in cell {bad}; "
                "reduce the time step")
        order = np.argsort(sub, axis=1, kind="stable")
        rows = np.arange(len(sub))
        n1, n2, n3 = order.T
        h1 = np.zeros(len(sub))
        d1 = h1 - sub[rows, n1]
        h2 = np.maximum(0.0, sub[rows, n2] - 0.5 * d1)
        h3 = sub[rows, n3] - d1 - (h2 - sub[rows, n2])
        res = np.empty_like(sub)
        res[rows, n1] = h1
        res[rows, n2] = h2
        # round-off can leave the last node a few ulps below zero
        res[rows, n3] = np.maximum(h3, 0.0)
        out[neg] = res
    return out[0] if single else out


def keep_unchanged(h, b, h_lim):
    """Restore cells whose limited depth equals the nonnegative input up to
    the round-off of the total height, so states at rest are exact fixed
    points of the limiter."""
    scale = np.maximum(np.abs(h + b), np.abs(b))
    same = ((h >= 0) & (np.abs(h_lim - h) <= _kernels.DEV_BAND * scale)).all(axis=1)
    return np.where(same[:, None], h, h_lim)


def velocity_candidates(h_lim, u_hat, m_mean):
    """The three single-node reconstructions ``u_i^{jk}`` (nc, 3).

    Entry ``i`` is the velocity at node ``i`` that keeps the cell-mean
    momentum when the other two nodes use ``u_hat``.  Undefined (``nan``)
    where ``h_lim[i] == 0``.
    """
    hu = h_lim * u_hat
    rest = 3.0 * m_mean[:, None] - (hu.sum(axis=1, keepdims=True) - hu)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(h_lim > 0, rest / np.where(h_lim > 0, h_lim, 1.0), np.nan)


def reconstruct_momentum(m, h, h_lim, lo, hi, tol_wet: float):
    """Velocity-based momentum reconstruction for given velocity bounds.

    ``m`` and ``h`` are the unlimited nodal momentum and depth (nc, 3),
    ``h_lim`` the output of the positive-depth operator and ``lo``/``hi``
    the admissible centroid-velocity range per cell.  Returns the limited
    nodal momentum and a mask of cells handled by the dry fallback (no
    node with ``h_lim >= tol_wet``).
    """
    mc = m.mean(axis=1)
    u = nodal_velocity(h, m, tol_wet)
    u_hat = np.maximum(np.minimum(u, hi[:, None]), lo[:, None])
    cand = velocity_candidates(h_lim, u_hat, mc)

    # in-cell velocity spread for each choice of reconstructed node
    spread = np.empty_like(cand)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        a, b = u_hat[:, j], u_hat[:, k]
        c = cand[:, i]
        spread[:, i] = (np.maximum(np.maximum(a, b), c)
                        - np.minimum(np.minimum(a, b), c))
    spread[(h_lim < tol_wet) | np.isnan(spread)] = np.inf

    choice = np.argmin(spread, axis=1)                   # ties -> lowest index
    rows = np.arange(len(m))
    vel = u_hat.copy()
    vel[rows, choice] = cand[rows, choice]
    out = h_lim * vel
    fallback = np.isinf(spread[:, 0]) & np.isinf(spread[:, 1]) & np.isinf(spread[:, 2])
    if np.any(fallback):
        hc = h[fallback].mean(axis=1)
        out[fallback] = np.where(hc >= tol_wet, mc[fallback], 0.0)[:, None]
    return out, fallback


def limit_momentum_component(m, h, h_lim, stencil, tol_wet: float):
    """Velocity-based limiting of one momentum component.

    The velocity bounds are the min/max centroid velocities ``m_c / h_c``
    (zero where ``h_c < tol_wet``) over the stencil.
    """
    uc = nodal_velocity(h.mean(axis=1), m.mean(axis=1), tol_wet)
    lo, hi = neighborhood_bounds(uc, stencil)
    return reconstruct_momentum(m, h, h_lim, lo, hi, tol_wet)


def limit_momentum(U, h_lim, stencil, tol_wet: float):
    """Limit both momentum components; returns (hu, hv, fallback_mask)."""
    mx, fx = limit_momentum_component(U[1], U[0], h_lim, stencil, tol_wet)
    my, fy = limit_momentum_component(U[2], U[0], h_lim, stencil, tol_wet)
    return mx, my, fx | fy


def limit_direct(m, stencil):
    """Barth/Jespersen limiting applied to the momentum itself."""
    mc = m.mean(axis=1)
    lo, hi = neighborhood_bounds(mc, stencil)
    alpha = correction_factor(m, mc, lo, hi)
    return np.where((alpha == 1.0)[:, None], m,
                    mc[:, None] + alpha[:, None] * (m - mc[:, None]))


def apply_limiter(U, b, mesh: Mesh, variant="vertex", tol_wet: float = 1e-6,
                  momentum: str = "velocity", backend: str = "numba"):
    """Full limiting pass on a field ``U`` of shape (3, nc, 3).

    ``b`` is the nodal bathymetry per cell (nc, 3).  ``momentum`` selects
    the velocity-based reconstruction or, for comparison, plain limiting of
    the momentum components (``"direct"``).  ``backend="numpy"`` runs the
    vectorized reference implementation.
    """
    stencil = mesh.stencil(_variant(variant))
    h = U[0]
    if momentum not in ("velocity", "direct"):
        raise ValueError(f"unknown momentum limiting {momentum!r}")
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if momentum == "velocity" and backend == "numba":
        out = np.empty_like(U, dtype=float)
        bad, nfb = _kernels.limit_velocity_mode(
            np.ascontiguousarray(U, dtype=float), np.ascontiguousarray(b, dtype=float),
            stencil, tol_wet, _ROUNDOFF, out)
        if bad >= 0:
            raise PositivityError(f"negative mean depth {U[0, bad].mean():.3e} in cell "
                                  f"{bad}; reduce the time step")
        if nfb:
            log.debug("dry fallback in %d cells", nfb)
        return out
    h_hat = limit_total_height(h, b, stencil)
    h_lim = keep_unchanged(h, b, positive_depth(
        h_hat, atol=_ROUNDOFF * float(np.abs(h).max(initial=0.0))))
    out = np.empty_like(U)
    out[0] = h_lim
    if momentum == "velocity":
        out[1], out[2], fallback = limit_momentum(U, h_lim, stencil, tol_wet)
        if log.isEnabledFor(logging.DEBUG) and fallback.any():
            lost = np.abs(U[1:, fallback].mean(axis=2)).max()
            log.debug("dry fallback in %d cells (max dropped mean momentum %.3e)",
                      int(fallback.sum()), lost)
    else:
        out[1] = limit_direct(U[1], stencil)
        out[2] = limit_direct(U[2], stencil)
    return out
