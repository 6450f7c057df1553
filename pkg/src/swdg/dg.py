"""Nodal P1 discontinuous Galerkin discretization of the shallow water
equations: quadrature, fluxes, boundary ghost states and the semi-discrete
right-hand side in weak or strong form.

Solution layout
---------------
A field ``U`` is an array of shape ``(3, n_cells, 3)``: ``U[0]`` depth
``h``, ``U[1]`` and ``U[2]`` the momentum components ``hu``, ``hv``; the
last axis holds the values at the cell's three vertices, which are also the
Lagrange nodes.  Bathymetry is given per mesh vertex and is therefore
continuous.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .mesh import INFLOW, TRANSPARENT, WALL, Mesh
from .wetdry import WetDryFlags, classify_cells, nodal_velocity

BACKENDS = ("numba", "numpy")

G = 9.80616

# edge-midpoint rule: barycentric coordinates of the three points, equal weights
_VOL_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
_VOL_W = np.full(3, 1.0 / 3.0)
# two-point Gauss-Legendre on [0, 1]
_EDGE_S = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
_EDGE_W = np.array([0.5, 0.5])


def volume_quadrature():
    """Points and weights on the reference triangle (0,0), (1,0), (0,1).

    Degree-2 exact; weights sum to the reference area 1/2.
    """
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return _VOL_BARY @ ref, _VOL_W * 0.5


def edge_quadrature():
    """Two-point Gauss-Legendre points and weights on [0, 1] (degree 3)."""
    return _EDGE_S.copy(), _EDGE_W.copy()


def physical_flux(U, g: float = G, tol_wet: float = 1e-12) -> np.ndarray:
    """Flux tensor ``F(U)`` with shape ``U.shape[:-1]... (3, 2)``.

    ``U`` has its conserved variables on the first axis.  The result is
    indexed ``[variable, ..., direction]``.  Advective parts vanish where
    ``h < tol_wet``.
    """
    U = np.asarray(U, dtype=float)
    h, mx, my = U[0], U[1], U[2]
    u = nodal_velocity(h, mx, tol_wet)
    v = nodal_velocity(h, my, tol_wet)
    p = 0.5 * g * h * h
    wet = h >= tol_wet
    F = np.empty((3,) + np.shape(h) + (2,))
    F[0, ..., 0] = np.where(wet, mx, 0.0)
    F[0, ..., 1] = np.where(wet, my, 0.0)
    F[1, ..., 0] = mx * u + p
    F[1, ..., 1] = mx * v
    F[2, ..., 0] = my * u
    F[2, ..., 1] = my * v + p
    return F


def _normal_flux(h, mx, my, un, nx, ny, g, tol_wet=None):
    # with tol_wet the mass flux follows the thin-layer convention (zero
    # below the tolerance), which keeps the Rusanov flux positivity-preserving
    p = 0.5 * g * h * h
    mn = mx * nx + my * ny
    if tol_wet is not None:
        mn = np.where(h >= tol_wet, mn, 0.0)
    return np.stack([mn, mx * un + p * nx, my * un + p * ny])


def _trace(U, nx, ny, g):
    p = 0.5 * g * U[0] * U[0]
    return np.stack([U[1] * nx + U[2] * ny, p * nx, p * ny])


def rusanov_flux(UL, UR, n, g: float = G, tol_wet: float = 1e-12) -> np.ndarray:
    """Rusanov (local Lax-Friedrichs) normal flux per unit edge length.

    ``UL`` is the interior and ``UR`` the exterior state, ``n`` the unit
    normal pointing from L to R; all may carry trailing batch axes.
    """
    UL = np.asarray(UL, dtype=float)
    UR = np.asarray(UR, dtype=float)
    n = np.asarray(n, dtype=float)
    nx, ny = n[0], n[1]
    hL, hR = UL[0], UR[0]
    unL = nodal_velocity(hL, UL[1] * nx + UL[2] * ny, tol_wet)
    unR = nodal_velocity(hR, UR[1] * nx + UR[2] * ny, tol_wet)
    lam = np.maximum(np.abs(unL) + np.sqrt(g * hL), np.abs(unR) + np.sqrt(g * hR))
    FL = _normal_flux(hL, UL[1], UL[2], unL, nx, ny, g, tol_wet)
    FR = _normal_flux(hR, UR[1], UR[2], unR, nx, ny, g, tol_wet)
    return 0.5 * (FL + FR) - 0.5 * lam * (UR - UL)


@dataclass(frozen=True)
class InflowSpec:
    """Prescribed boundary depth ``depth(t)`` entering as a simple wave over
    still water of depth ``h0``."""

    depth: Callable[[float], float]
    h0: float


def ghost_state(tag, U, n, t: float = 0.0, inflow: InflowSpec | None = None,
                g: float = G) -> np.ndarray:
    """Exterior state for a physical boundary.

    ``tag`` is ``"wall"``, ``"transparent"``, ``"inflow"`` or the matching
    integer code, and may be an array (one code per trailing batch entry).
    """
    U = np.asarray(U, dtype=float)
    n = np.asarray(n, dtype=float)
    codes = {"wall": WALL, "transparent": TRANSPARENT, "inflow": INFLOW}
    tag = np.asarray(tag)
    if tag.dtype.kind in "US":
        unknown = set(np.unique(tag).tolist()) - set(codes)
        if unknown:
            raise ValueError(f"no ghost state for boundary tag(s) {sorted(unknown)}")
        tag = np.vectorize(codes.__getitem__, otypes=[np.int64])(tag)
    tag = np.broadcast_to(tag, U.shape[1:])
    out = U.copy()
    nx, ny = n[0], n[1]
    mn = U[1] * nx + U[2] * ny
    wall = tag == WALL
    out[1] = np.where(wall, U[1] - 2.0 * mn * nx, out[1])
    out[2] = np.where(wall, U[2] - 2.0 * mn * ny, out[2])
    inflow_mask = tag == INFLOW
    if np.any(inflow_mask):
        if inflow is None:
            raise ValueError("inflow boundary without an inflow specification")
        hb = float(inflow.depth(t))
        speed = 2.0 * (np.sqrt(g * hb) - np.sqrt(g * inflow.h0))
        out[0] = np.where(inflow_mask, hb, out[0])
        out[1] = np.where(inflow_mask, -hb * speed * nx, out[1])
        out[2] = np.where(inflow_mask, -hb * speed * ny, out[2])
    bad = ~(wall | inflow_mask | (tag == TRANSPARENT))
    if np.any(bad):
        raise ValueError(f"no ghost state for boundary code {np.unique(tag[bad])}")
    return out


class DGOperator:
    """Precomputed geometry and the assembly of ``dU/dt`` on a fixed mesh."""

    def __init__(self, mesh: Mesh, bathymetry, g: float = G, tol_wet: float = 1e-6,
                 form: str = "strong", inflow: InflowSpec | None = None,
                 backend: str = "numba"):
        if form not in ("strong", "weak"):
            raise ValueError(f"unknown DG form {form!r}")
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}")
        self.backend = backend
        bathymetry = np.asarray(bathymetry, dtype=float)
        if bathymetry.shape != (mesh.n_vertices,):
            raise ValueError("bathymetry must hold one value per mesh vertex")
        self.mesh = mesh
        self.g = g
        self.tol_wet = tol_wet
        self.form = form
        self.inflow = inflow
        nc = mesh.n_cells
        self.nc = nc
        self.b = np.ascontiguousarray(bathymetry[mesh.cells])  # (nc, 3)
        self.grads = mesh.basis_gradients                     # (nc, 3, 2)
        self.grad_b = np.einsum("ck,ckd->cd", self.b, self.grads)
        self.area = mesh.area

        ec, en = mesh.edge_cells, mesh.edge_nodes
        interior = ec[:, 1] >= 0
        self.int_edges = np.flatnonzero(interior)
        self.bnd_edges = np.flatnonzero(~interior)
        if np.any(mesh.edge_tag[self.bnd_edges] == INFLOW) and inflow is None:
            raise ValueError("mesh has inflow edges but no inflow specification")
        # flat (cell * 3 + node) indices of the edge endpoints per side
        self.iL = ec[:, 0:1] * 3 + en[:, 0, :]                 # (ne, 2)
        self.iR = np.where(interior[:, None], ec[:, 1:2] * 3 + en[:, 1, :], -1)
        self.normal = mesh.edge_normal.T.copy()               # (2, ne)
        self.length = mesh.edge_length
        self.bnd_tag = mesh.edge_tag[self.bnd_edges]
        # basis values at edge quadrature points: endpoint 0 -> 1-s, endpoint 1 -> s
        self.phi_e = np.stack([1.0 - _EDGE_S, _EDGE_S], axis=1)  # (q, endpoint)

        # scatter indices for the edge contributions
        ne = mesh.n_edges
        self._left_idx = np.concatenate([self.iL[:, 0], self.iL[:, 1]])
        self._right_idx = np.concatenate([self.iR[self.int_edges, 0],
                                          self.iR[self.int_edges, 1]])
        self._ne = ne
        # contiguous copies for the compiled kernels
        self._ec = np.ascontiguousarray(ec, dtype=np.int64)
        self._en = np.ascontiguousarray(en, dtype=np.int64)
        self._nrm = np.ascontiguousarray(mesh.edge_normal, dtype=float)
        self._tags = np.ascontiguousarray(mesh.edge_tag, dtype=np.int64)
        self.grads = np.ascontiguousarray(self.grads)
        self.grad_b = np.ascontiguousarray(self.grad_b)

    # ------------------------------------------------------------------
    def flags(self, U) -> WetDryFlags:
        if self.backend == "numpy":
            return classify_cells(U[0], self.b, self.tol_wet)
        if not self.tol_wet > 0:
            raise ValueError(f"tol_wet must be positive, got {self.tol_wet!r}")
        nc = self.nc
        cls = np.empty(nc, dtype=np.int8)
        dry = np.empty((nc, 3), dtype=bool)
        goff = np.empty(nc, dtype=bool)
        _kernels.classify(np.ascontiguousarray(U[0], dtype=float), self.b, self.tol_wet,
                          cls, dry, goff)
        return WetDryFlags(cell_class=cls, dry_node=dry, gravity_off=goff)

    def rhs(self, U, t: float = 0.0, flags: WetDryFlags | None = None) -> np.ndarray:
        """Nodal time derivative of ``U``."""
        U = np.asarray(U, dtype=float)
        if U.shape != (3, self.nc, 3):
            raise ValueError(f"field must have shape (3, {self.nc}, 3), got {U.shape}")
        if flags is None:
            flags = self.flags(U)
        if flags.gravity_off.shape != (self.nc,):
            raise ValueError("wet/dry flags do not match the mesh")
        gcell = np.where(flags.gravity_off, 0.0, self.g)       # (nc,)
        if self.backend == "numba":
            R = self._compiled(U, t, gcell, flags.gravity_off)
            _kernels.apply_mass_inverse(R, self.area)
            return R
        R = self._volume(U, gcell) + self._edges(U, t, flags.gravity_off)
        # exact inverse of the P1 mass matrix area/12 * [[2,1,1],[1,2,1],[1,1,2]]
        return (3.0 / self.area)[None, :, None] * (4.0 * R - R.sum(axis=2, keepdims=True))

    # ------------------------------------------------------------------
    def _compiled(self, U, t, gcell, gravity_off):
        U = np.ascontiguousarray(U, dtype=float)
        R = np.empty_like(U)
        strong = self.form == "strong"
        _kernels.volume_residual(U, R, self.grads, self.area, self.grad_b, gcell,
                                 self.tol_wet, strong)
        hb = speed = 0.0
        if self.inflow is not None:
            hb = float(self.inflow.depth(t))
            speed = 2.0 * (np.sqrt(self.g * hb) - np.sqrt(self.g * self.inflow.h0))
        _kernels.edge_residual(U, R, self._ec, self._en, self._nrm, self.length,
                               self._tags, np.ascontiguousarray(gravity_off),
                               self.g, self.tol_wet, strong, hb, speed)
        return R

    def _volume(self, U, gcell):
        tol = self.tol_wet
        A3 = (self.area / 3.0)[:, None]
        Uq = U @ _VOL_BARY.T                                   # (3, nc, q)
        h, mx, my = Uq
        u = nodal_velocity(h, mx, tol)
        v = nodal_velocity(h, my, tol)
        grads = self.grads
        gU = np.einsum("vck,ckd->vcd", U, grads)               # (3, nc, 2)
        R = np.empty_like(U)
        gx, gy = grads[..., 0], grads[..., 1]                  # (nc, 3)
        # advective flux integrated against grad(phi); identical in both forms
        fxx = (mx * u).sum(1, keepdims=True)
        fxy = (mx * v).sum(1, keepdims=True)
        fyx = (my * u).sum(1, keepdims=True)
        fyy = (my * v).sum(1, keepdims=True)
        adv_x = A3 * (fxx * gx + fxy * gy)
        adv_y = A3 * (fyx * gx + fyy * gy)
        if self.form == "strong":
            # the advective trace is removed again in the edge term, so only
            # mass and gravity enter as in-cell divergences
            gh, gmx, gmy = gU
            div_m = (gmx[:, 0] + gmy[:, 1])[:, None]
            gH = gh + self.grad_b
            gq = gcell[:, None] * h
            # sum_q w_q phi_k(x_q) f_q with phi_k(x_q) = _VOL_BARY[q, k]
            R[0] = -(self.area[:, None] / 3.0) * div_m
            R[1] = adv_x - A3 * ((gq * gH[:, 0:1]) @ _VOL_BARY)
            R[2] = adv_y - A3 * ((gq * gH[:, 1:2]) @ _VOL_BARY)
        else:
            p = 0.5 * gcell[:, None] * h * h
            src_x = (gcell[:, None] * h * self.grad_b[:, 0:1]) @ _VOL_BARY
            src_y = (gcell[:, None] * h * self.grad_b[:, 1:2]) @ _VOL_BARY
            ps = p.sum(1, keepdims=True)
            R[0] = A3 * (mx.sum(1, keepdims=True) * gx + my.sum(1, keepdims=True) * gy)
            R[1] = adv_x + A3 * (ps * gx - src_x)
            R[2] = adv_y + A3 * (ps * gy - src_y)
        return R

    def _edges(self, U, t, gravity_off):
        nc, g, tol = self.nc, self.g, self.tol_wet
        Uf = U.reshape(3, nc * 3)
        ne = self._ne
        phi = self.phi_e                                       # (q, 2)
        UL = Uf[:, self.iL] @ phi.T                            # (3, ne, q)
        UR = np.empty_like(UL)
        ie, be = self.int_edges, self.bnd_edges
        UR[:, ie] = Uf[:, self.iR[ie]] @ phi.T
        nx, ny = self.normal[0][:, None], self.normal[1][:, None]
        if len(be):
            nb = np.stack([np.broadcast_to(nx[be], (len(be), 2)),
                           np.broadcast_to(ny[be], (len(be), 2))])
            UR[:, be] = ghost_state(np.repeat(self.bnd_tag[:, None], 2, axis=1),
                                    UL[:, be], nb, t, self.inflow, g)
        n = np.stack(np.broadcast_arrays(nx, ny))
        Fs = rusanov_flux(UL, UR, n, g, tol)                   # (3, ne, q)
        wl = (self.length[:, None] * _EDGE_W[None, :])          # (ne, q)
        lc = self.mesh.edge_cells[:, 0]
        rc = self.mesh.edge_cells[:, 1]
        if self.form == "strong":
            # subtract the interior trace of the in-cell divergence terms:
            # the mass flux and the hydrostatic pressure
            GL = Fs - _trace(UL, nx, ny, g)
            GR = Fs - _trace(UR, nx, ny, g)
        else:
            GL = Fs.copy()
            GR = Fs.copy()
            # balance the pressure part of the numerical flux on wet edges of
            # gravity-off cells, using the cell's own trace depth
            wet_from_L = UR[0].mean(axis=1) >= tol             # neighbour seen by L
            wet_from_R = UL[0].mean(axis=1) >= tol
            corrL = (gravity_off[lc] & wet_from_L)[:, None]
            corrR = (gravity_off[np.maximum(rc, 0)] & (rc >= 0) & wet_from_R)[:, None]
            pL = 0.5 * g * UL[0] ** 2
            pR = 0.5 * g * UR[0] ** 2
            GL[1] -= np.where(corrL, pL * nx, 0.0)
            GL[2] -= np.where(corrL, pL * ny, 0.0)
            GR[1] -= np.where(corrR, pR * nx, 0.0)
            GR[2] -= np.where(corrR, pR * ny, 0.0)
        # left: -w * G * phi ; right (outward normal -n): +w * G * phi
        cL = -(GL * wl) @ phi                                  # (3, ne, endpoint)
        cR = (GR[:, ie] * wl[ie]) @ phi
        idx = np.concatenate([self._left_idx, self._right_idx])
        R = np.empty((3, nc * 3))
        for var in range(3):
            w = np.concatenate([cL[var, :, 0], cL[var, :, 1], cR[var, :, 0], cR[var, :, 1]])
            R[var] = np.bincount(idx, weights=w, minlength=nc * 3)
        return R.reshape(3, nc, 3)


def compute_rhs(field, bathymetry, mesh: Mesh, flags: WetDryFlags | None = None,
                form: str = "strong", g: float = G, t: float = 0.0,
                tol_wet: float = 1e-6, inflow: InflowSpec | None = None,
                backend: str = "numba") -> np.ndarray:
    """One-shot right-hand side evaluation (builds a :class:`DGOperator`)."""
    op = DGOperator(mesh, bathymetry, g=g, tol_wet=tol_wet, form=form, inflow=inflow,
                    backend=backend)
    return op.rhs(field, t, flags)


def nodal_field(mesh: Mesh, h_vertex, u_vertex=None, v_vertex=None) -> np.ndarray:
    """Assemble a continuous P1 field from per-vertex depth and velocity."""
    h = np.asarray(h_vertex, dtype=float)[mesh.cells]
    U = np.zeros((3, mesh.n_cells, 3))
    U[0] = h
    if u_vertex is not None:
        U[1] = h * np.asarray(u_vertex, dtype=float)[mesh.cells]
    if v_vertex is not None:
        U[2] = h * np.asarray(v_vertex, dtype=float)[mesh.cells]
    return U
