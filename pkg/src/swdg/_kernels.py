"""Compiled loop kernels for the right-hand side and the limiter.

These mirror the vectorized numpy implementations in :mod:`swdg.dg` and
:mod:`swdg.limiter` operation for operation; the test suite checks both
paths against each other.  Edges and cells are visited in index order, so
the accumulation order (and hence the result) is deterministic.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

_S0 = 0.5 - 0.5 / math.sqrt(3.0)
_S1 = 0.5 + 0.5 / math.sqrt(3.0)

WALL, TRANSPARENT, INFLOW = 1, 2, 3


@njit(cache=True)
def _vel(h, m, tol):
    return m / h if h >= tol else 0.0


@njit(cache=True)
def edge_residual(U, R, ec, en, normal, length, tag, gravity_off, g, tol, strong,
                  hb, speed):
    """Add the edge contributions to ``R`` (3, nc, 3) in place.

    ``hb``/``speed`` are the inflow depth and simple-wave speed at the current
    time (unused when no edge is tagged inflow).
    """
    ne = ec.shape[0]
    UL = np.empty((3, 2))
    UR = np.empty((3, 2))
    for e in range(ne):
        L = ec[e, 0]
        Rc = ec[e, 1]
        a0 = en[e, 0, 0]
        a1 = en[e, 0, 1]
        nx = normal[e, 0]
        ny = normal[e, 1]
        for q in range(2):
            s = _S0 if q == 0 else _S1
            for k in range(3):
                UL[k, q] = (1.0 - s) * U[k, L, a0] + s * U[k, L, a1]
            if Rc >= 0:
                b0 = en[e, 1, 0]
                b1 = en[e, 1, 1]
                for k in range(3):
                    UR[k, q] = (1.0 - s) * U[k, Rc, b0] + s * U[k, Rc, b1]
            else:
                t_ = tag[e]
                h = UL[0, q]
                mx = UL[1, q]
                my = UL[2, q]
                if t_ == WALL:
                    mn = mx * nx + my * ny
                    UR[0, q] = h
                    UR[1, q] = mx - 2.0 * mn * nx
                    UR[2, q] = my - 2.0 * mn * ny
                elif t_ == INFLOW:
                    UR[0, q] = hb
                    UR[1, q] = -hb * speed * nx
                    UR[2, q] = -hb * speed * ny
                else:
                    UR[0, q] = h
                    UR[1, q] = mx
                    UR[2, q] = my
        # edge-mean depths used by the weak-form wet-edge test
        hRm = 0.5 * (UR[0, 0] + UR[0, 1])
        hLm = 0.5 * (UL[0, 0] + UL[0, 1])
        corrL = (not strong) and gravity_off[L] and hRm >= tol
        corrR = (not strong) and Rc >= 0 and gravity_off[max(Rc, 0)] and hLm >= tol
        for q in range(2):
            s = _S0 if q == 0 else _S1
            w = 0.5 * length[e]
            hL = UL[0, q]
            hR = UR[0, q]
            mnL = UL[1, q] * nx + UL[2, q] * ny
            mnR = UR[1, q] * nx + UR[2, q] * ny
            unL = _vel(hL, mnL, tol)
            unR = _vel(hR, mnR, tol)
            lam = max(abs(unL) + math.sqrt(g * hL), abs(unR) + math.sqrt(g * hR))
            pL = 0.5 * g * hL * hL
            pR = 0.5 * g * hR * hR
            fL0 = mnL if hL >= tol else 0.0
            fR0 = mnR if hR >= tol else 0.0
            F0 = 0.5 * (fL0 + fR0) - 0.5 * lam * (hR - hL)
            F1 = 0.5 * ((UL[1, q] * unL + pL * nx) + (UR[1, q] * unR + pR * nx)) \
                - 0.5 * lam * (UR[1, q] - UL[1, q])
            F2 = 0.5 * ((UL[2, q] * unL + pL * ny) + (UR[2, q] * unR + pR * ny)) \
                - 0.5 * lam * (UR[2, q] - UL[2, q])
            if strong:
                gl0 = F0 - mnL
                gl1 = F1 - pL * nx
                gl2 = F2 - pL * ny
                gr0 = F0 - mnR
                gr1 = F1 - pR * nx
                gr2 = F2 - pR * ny
            else:
                gl0 = F0
                gl1 = F1
                gl2 = F2
                gr0 = F0
                gr1 = F1
                gr2 = F2
                if corrL:
                    gl1 -= pL * nx
                    gl2 -= pL * ny
                if corrR:
                    gr1 -= pR * nx
                    gr2 -= pR * ny
            w0 = w * (1.0 - s)
            w1 = w * s
            R[0, L, a0] -= w0 * gl0
            R[1, L, a0] -= w0 * gl1
            R[2, L, a0] -= w0 * gl2
            R[0, L, a1] -= w1 * gl0
            R[1, L, a1] -= w1 * gl1
            R[2, L, a1] -= w1 * gl2
            if Rc >= 0:
                b0 = en[e, 1, 0]
                b1 = en[e, 1, 1]
                R[0, Rc, b0] += w0 * gr0
                R[1, Rc, b0] += w0 * gr1
                R[2, Rc, b0] += w0 * gr2
                R[0, Rc, b1] += w1 * gr0
                R[1, Rc, b1] += w1 * gr1
                R[2, Rc, b1] += w1 * gr2


@njit(cache=True)
def volume_residual(U, R, grads, area, grad_b, gcell, tol, strong):
    """Write the volume contributions into ``R`` (3, nc, 3)."""
    nc = U.shape[1]
    hq = np.empty(3)
    mxq = np.empty(3)
    myq = np.empty(3)
    for c in range(nc):
        A3 = area[c] / 3.0
        # edge-midpoint values: q -> nodes (q, q+1)
        for q in range(3):
            k = (q + 1) % 3
            hq[q] = 0.5 * (U[0, c, q] + U[0, c, k])
            mxq[q] = 0.5 * (U[1, c, q] + U[1, c, k])
            myq[q] = 0.5 * (U[2, c, q] + U[2, c, k])
        fxx = 0.0
        fxy = 0.0
        fyx = 0.0
        fyy = 0.0
        psum = 0.0
        for q in range(3):
            u = _vel(hq[q], mxq[q], tol)
            v = _vel(hq[q], myq[q], tol)
            fxx += mxq[q] * u
            fxy += mxq[q] * v
            fyx += myq[q] * u
            fyy += myq[q] * v
            psum += 0.5 * gcell[c] * hq[q] * hq[q]
        gbx = grad_b[c, 0]
        gby = grad_b[c, 1]
        if strong:
            ghx = 0.0
            ghy = 0.0
            div_m = 0.0
            for k in range(3):
                ghx += U[0, c, k] * grads[c, k, 0]
                ghy += U[0, c, k] * grads[c, k, 1]
                div_m += U[1, c, k] * grads[c, k, 0] + U[2, c, k] * grads[c, k, 1]
            gHx = ghx + gbx
            gHy = ghy + gby
            for k in range(3):
                gx = grads[c, k, 0]
                gy = grads[c, k, 1]
                # phi_k at midpoints: 1/2 at the two midpoints touching node k
                hk = 0.5 * (hq[k] + hq[(k + 2) % 3])
                R[0, c, k] = -A3 * div_m
                R[1, c, k] = A3 * (fxx * gx + fxy * gy) - A3 * gcell[c] * hk * gHx
                R[2, c, k] = A3 * (fyx * gx + fyy * gy) - A3 * gcell[c] * hk * gHy
        else:
            msx = mxq[0] + mxq[1] + mxq[2]
            msy = myq[0] + myq[1] + myq[2]
            for k in range(3):
                gx = grads[c, k, 0]
                gy = grads[c, k, 1]
                hk = 0.5 * (hq[k] + hq[(k + 2) % 3])
                R[0, c, k] = A3 * (msx * gx + msy * gy)
                R[1, c, k] = A3 * (fxx * gx + fxy * gy + psum * gx - gcell[c] * hk * gbx)
                R[2, c, k] = A3 * (fyx * gx + fyy * gy + psum * gy - gcell[c] * hk * gby)


# nodal deviations from the cell mean within a few ulps are round-off in
# the mean itself and do not trigger limiting
DEV_BAND = 4.0 * 2.220446049250313e-16


@njit(cache=True)
def limit_velocity_mode(U, b, stencil, tol, rel_atol, out):
    """Depth limiting, positive-depth redistribution and velocity-based
    momentum limiting into ``out``.

    Returns ``(bad_cell, n_fallback)`` where ``bad_cell`` is -1 unless a
    cell mean depth is negative beyond round-off (relative to the cell scale
    and to ``rel_atol`` times the largest depth of the field).
    """
    nc = U.shape[1]
    ks = stencil.shape[1]
    hmax = 0.0
    for c in range(nc):
        for k in range(3):
            hmax = max(hmax, abs(U[0, c, k]))
    atol = rel_atol * hmax
    Hc = np.empty(nc)
    uc = np.empty((2, nc))
    for c in range(nc):
        Hc[c] = ((U[0, c, 0] + b[c, 0]) + (U[0, c, 1] + b[c, 1])
                 + (U[0, c, 2] + b[c, 2])) / 3.0
        hcm = (U[0, c, 0] + U[0, c, 1] + U[0, c, 2]) / 3.0
        for d in range(2):
            mc = (U[1 + d, c, 0] + U[1 + d, c, 1] + U[1 + d, c, 2]) / 3.0
            uc[d, c] = _vel(hcm, mc, tol)
    hh = np.empty(3)
    hl = np.empty(3)
    uh = np.empty(3)
    cand = np.empty(3)
    spread = np.empty(3)
    n_fallback = 0
    for c in range(nc):
        # ---- total height limiting
        lo = Hc[stencil[c, 0]]
        hi = lo
        for j in range(1, ks):
            val = Hc[stencil[c, j]]
            lo = min(lo, val)
            hi = max(hi, val)
        Hm = Hc[c]
        alpha = 1.0
        for k in range(3):
            Hk = U[0, c, k] + b[c, k]
            d = Hk - Hm
            band = DEV_BAND * max(abs(Hk), abs(Hm))
            if d > band:
                r = (hi - Hm) / d
            elif d < -band:
                r = (lo - Hm) / d
            else:
                r = 1.0
            r = min(max(r, 0.0), 1.0)
            alpha = min(alpha, r)
        for k in range(3):
            if alpha == 1.0:
                hh[k] = U[0, c, k]
            else:
                hh[k] = (Hm + alpha * (U[0, c, k] + b[c, k] - Hm)) - b[c, k]
        # ---- positive depth
        if hh[0] < 0 or hh[1] < 0 or hh[2] < 0:
            total = hh[0] + hh[1] + hh[2]
            scale = max(abs(hh[0]), max(abs(hh[1]), abs(hh[2])))
            if total < -max(1e-13 * scale, 3.0 * atol):
                return c, n_fallback
            # stable ascending order of the three values
            n1, n2, n3 = 0, 1, 2
            if hh[n2] < hh[n1]:
                n1, n2 = n2, n1
            if hh[n3] < hh[n2]:
                n2, n3 = n3, n2
                if hh[n2] < hh[n1]:
                    n1, n2 = n2, n1
            d1 = 0.0 - hh[n1]
            h2 = max(0.0, hh[n2] - 0.5 * d1)
            h3 = hh[n3] - d1 - (h2 - hh[n2])
            hl[n1] = 0.0
            hl[n2] = h2
            hl[n3] = max(h3, 0.0)
        else:
            hl[0] = hh[0]
            hl[1] = hh[1]
            hl[2] = hh[2]
        if alpha < 1.0:
            # a nonnegative input reproduced to round-off is kept exactly
            keep = True
            for k in range(3):
                h0 = U[0, c, k]
                sc = max(abs(h0 + b[c, k]), abs(b[c, k]))
                if h0 < 0 or abs(hl[k] - h0) > DEV_BAND * sc:
                    keep = False
            if keep:
                for k in range(3):
                    hl[k] = U[0, c, k]
        for k in range(3):
            out[0, c, k] = hl[k]
        # ---- velocity-based momentum limiting
        fell_back = False
        for d in range(2):
            ulo = uc[d, stencil[c, 0]]
            uhi = ulo
            for j in range(1, ks):
                val = uc[d, stencil[c, j]]
                ulo = min(ulo, val)
                uhi = max(uhi, val)
            mc = (U[1 + d, c, 0] + U[1 + d, c, 1] + U[1 + d, c, 2]) / 3.0
            for k in range(3):
                u = _vel(U[0, c, k], U[1 + d, c, k], tol)
                uh[k] = max(min(u, uhi), ulo)
            hus = hl[0] * uh[0] + hl[1] * uh[1] + hl[2] * uh[2]
            best = -1
            bval = np.inf
            for i in range(3):
                j = (i + 1) % 3
                k = (i + 2) % 3
                if hl[i] < tol or not hl[i] > 0:
                    spread[i] = np.inf
                    continue
                rest = 3.0 * mc - (hus - hl[i] * uh[i])
                cand[i] = rest / hl[i]
                a = uh[j]
                bb = uh[k]
                cc = cand[i]
                sp = max(max(a, bb), cc) - min(min(a, bb), cc)
                if sp != sp:
                    sp = np.inf
                spread[i] = sp
                if sp < bval:
                    bval = sp
                    best = i
            if best < 0:
                fell_back = True
                hcm = (U[0, c, 0] + U[0, c, 1] + U[0, c, 2]) / 3.0
                val = mc if hcm >= tol else 0.0
                for k in range(3):
                    out[1 + d, c, k] = val
            else:
                for k in range(3):
                    vel = cand[best] if k == best else uh[k]
                    out[1 + d, c, k] = hl[k] * vel
        if fell_back:
            n_fallback += 1
    return -1, n_fallback


@njit(cache=True)
def apply_mass_inverse(R, area):
    """In place: exact inverse of the P1 mass matrix, (3/A)(4 R_k - sum R)."""
    nc = R.shape[1]
    for v in range(3):
        for c in range(nc):
            f = 3.0 / area[c]
            s = R[v, c, 0] + R[v, c, 1] + R[v, c, 2]
            for k in range(3):
                R[v, c, k] = f * (4.0 * R[v, c, k] - s)


@njit(cache=True)
def classify(h, b, tol, cls, dry, gravity_off):
    """Per-cell wet/dry classes (codes of ``CellClass``) into the outputs."""
    nc = h.shape[0]
    for c in range(nc):
        nd = 0
        Hmax = -np.inf
        bmax = -np.inf
        for k in range(3):
            d = h[c, k] < tol
            dry[c, k] = d
            if d:
                nd += 1
            Hmax = max(Hmax, h[c, k] + b[c, k])
            bmax = max(bmax, b[c, k])
        crit = Hmax - bmax < tol
        if nd == 0:
            cls[c] = 0
        elif nd == 3:
            cls[c] = 3
        else:
            cls[c] = 2 if crit else 1
        gravity_off[c] = nd > 0 and crit
