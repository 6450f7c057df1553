"""Conforming triangular meshes: construction, refinement, file I/O and
the adjacency/metric queries the DG solver needs.

All connectivity is stored as flat numpy arrays so that the solver kernels
can gather/scatter without Python loops.  A :class:`Mesh` is immutable after
construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# boundary codes stored per edge; periodic edges are converted to interior
INTERIOR = 0
WALL = 1
TRANSPARENT = 2
INFLOW = 3

TAG_CODES = {"wall": WALL, "transparent": TRANSPARENT, "inflow": INFLOW}
SIDES = ("left", "right", "bottom", "top")


class MeshError(ValueError):
    """Raised for invalid mesh input (non-conforming, degenerate, bad tags)."""


def _parse_tag(tag: str) -> str:
    tag = tag.strip()
    if tag in TAG_CODES:
        return tag
    if tag.startswith("periodic:") and len(tag) > len("periodic:"):
        return tag
    raise MeshError(f"unknown boundary tag {tag!r}")


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation with the derived topology used by the solver.

    Local edge ``k`` of a cell joins local nodes ``k`` and ``(k+1) % 3``.
    For every edge the *left* cell is the one with the lower index (for
    boundary edges the only cell); ``edge_normal`` points out of the left
    cell and ``edge_nodes[e, side, j]`` gives the local node of the
    ``side`` cell (0 = left, 1 = right) sitting at endpoint ``j``.  For
    periodic edges both sides refer to translated copies of the same points.
    """

    vertices: np.ndarray            # (nv, 2)
    cells: np.ndarray               # (nc, 3), counter-clockwise
    edge_cells: np.ndarray          # (ne, 2), right = -1 on boundary
    edge_nodes: np.ndarray          # (ne, 2, 2)
    edge_length: np.ndarray         # (ne,)
    edge_normal: np.ndarray         # (ne, 2)
    edge_tag: np.ndarray            # (ne,) INTERIOR / WALL / TRANSPARENT / INFLOW
    cell_edges: np.ndarray          # (nc, 3) global edge of each local edge
    area: np.ndarray                # (nc,)
    vertex_class: np.ndarray        # (nv,) periodic-identified vertex id
    boundary_records: tuple = field(default=())  # ((va, vb, tag), ...) as given

    @classmethod
    def from_cells(cls, vertices, cells, boundary=None) -> "Mesh":
        """Build the topology from raw connectivity.

        ``boundary`` maps vertex pairs ``(va, vb)`` (either order) to a tag:
        ``wall``, ``transparent``, ``inflow`` or ``periodic:<id>``.  Every
        geometric boundary edge must be tagged.
        """
        vertices = np.ascontiguousarray(vertices, dtype=float)
        cells = np.array(cells, dtype=np.int64).reshape(-1, 3)
        nv = len(vertices)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshError("vertices must be an (n, 2) array")
        if len(cells) == 0:
            raise MeshError("mesh has no cells")
        if cells.min() < 0 or cells.max() >= nv:
            raise MeshError("cell references a vertex index out of range")
        if np.any((cells[:, 0] == cells[:, 1]) | (cells[:, 1] == cells[:, 2])
                  | (cells[:, 0] == cells[:, 2])):
            raise MeshError("cell with repeated vertex")

        p = vertices[cells]
        signed = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                        - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
        scale = np.max(np.ptp(vertices, axis=0)) ** 2
        if np.any(np.abs(signed) <= 1e-14 * scale):
            raise MeshError("degenerate (zero-area) cell")
        cw = signed < 0
        if np.any(cw):
            cells[cw] = cells[cw][:, [0, 2, 1]]
        area = np.abs(signed)

        # unique edges
        nc = len(cells)
        a = cells
        b = np.roll(cells, -1, axis=1)
        lo = np.minimum(a, b).ravel()
        hi = np.maximum(a, b).ravel()
        keys = lo * nv + hi
        uniq, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
        if np.any(counts > 2):
            raise MeshError("non-conforming mesh: an edge is shared by more than two cells")
        inverse = inverse.reshape(nc, 3)

        bnd_ids = np.flatnonzero(counts == 1)
        bnd_lo, bnd_hi = uniq[bnd_ids] // nv, uniq[bnd_ids] % nv
        _check_hanging_nodes(vertices, bnd_lo, bnd_hi)

        records = []
        tag_of = {}
        for (va, vb), tag in (boundary or {}).items():
            tag = _parse_tag(tag)
            key = min(va, vb) * nv + max(va, vb)
            tag_of[key] = tag
            records.append((int(va), int(vb), tag))
        bnd_keys = set(uniq[bnd_ids].tolist())
        extra = set(tag_of) - bnd_keys
        if extra:
            k = next(iter(extra))
            raise MeshError(f"boundary record ({k // nv}, {k % nv}) is not a boundary edge")
        missing = bnd_keys - set(tag_of)
        if missing:
            k = next(iter(missing))
            raise MeshError(f"boundary edge ({k // nv}, {k % nv}) has no tag")

        # occurrences (cell, local edge) of each unique edge
        occ_cell = np.repeat(np.arange(nc), 3)
        occ_loc = np.tile(np.arange(3), nc)
        order = np.argsort(inverse.ravel(), kind="stable")
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        first = order[starts]
        second = np.where(counts == 2, order[np.minimum(starts + 1, len(order) - 1)], -1)

        ne_raw = len(uniq)
        c0 = occ_cell[first]
        l0 = occ_loc[first]
        # occurrences are cell-major and the sort is stable, so the first one
        # belongs to the lower cell index
        c1 = np.where(second >= 0, occ_cell[np.maximum(second, 0)], -1)

        # periodic pairing of boundary edges
        vclass = np.arange(nv)
        merged_into = -np.ones(ne_raw, dtype=np.int64)
        partner_cell = c1.copy()
        # vertex of the partner cell sitting at each endpoint (translated copy)
        image = {}
        periodic = {}
        for bid in bnd_ids:
            tag = tag_of[int(uniq[bid])]
            if tag.startswith("periodic:"):
                periodic.setdefault(tag, []).append(bid)
        for tag, ids in periodic.items():
            for e_a, e_b, vmap in _match_periodic(vertices, uniq, nv, np.array(ids), tag):
                for va, vb in vmap:
                    _union(vclass, va, vb)
                if c0[e_a] <= c0[e_b]:
                    keep, drop, fwd = e_a, e_b, dict(vmap)
                else:
                    keep, drop, fwd = e_b, e_a, {v: u for u, v in vmap}
                merged_into[drop] = keep
                partner_cell[keep] = c0[drop]
                image[keep] = fwd
        if periodic:
            for v in range(nv):
                vclass[v] = _find(vclass, v)

        keep_mask = merged_into < 0
        new_id = -np.ones(ne_raw, dtype=np.int64)
        new_id[keep_mask] = np.arange(int(keep_mask.sum()))
        new_id[~keep_mask] = new_id[merged_into[~keep_mask]]

        kept = np.flatnonzero(keep_mask)
        lc, ll = c0[kept], l0[kept]
        rc = partner_cell[kept]
        ne = len(kept)
        p0 = cells[lc, ll]
        p1 = cells[lc, (ll + 1) % 3]
        q0, q1 = p0.copy(), p1.copy()
        for e, fwd in image.items():
            i = new_id[e]
            q0[i], q1[i] = fwd[p0[i]], fwd[p1[i]]
        has_r = rc >= 0
        rcells = cells[np.maximum(rc, 0)]
        edge_nodes = np.zeros((ne, 2, 2), dtype=np.int64)
        edge_nodes[:, 0, 0] = ll
        edge_nodes[:, 0, 1] = (ll + 1) % 3
        edge_nodes[:, 1, 0] = np.where(has_r, np.argmax(rcells == q0[:, None], axis=1), -1)
        edge_nodes[:, 1, 1] = np.where(has_r, np.argmax(rcells == q1[:, None], axis=1), -1)

        pa = vertices[cells[lc, ll]]
        pb = vertices[cells[lc, (ll + 1) % 3]]
        d = pb - pa
        length = np.hypot(d[:, 0], d[:, 1])
        normal = np.stack([d[:, 1], -d[:, 0]], axis=1) / length[:, None]

        tag_arr = np.zeros(ne, dtype=np.int8)
        plain = np.flatnonzero(~has_r)
        tag_arr[plain] = [TAG_CODES[tag_of[int(k)]] for k in uniq[kept[plain]]]

        cell_edges = new_id[inverse]
        edge_cells = np.stack([lc, rc], axis=1)
        return cls(vertices=vertices, cells=cells, edge_cells=edge_cells,
                   edge_nodes=edge_nodes, edge_length=length, edge_normal=normal,
                   edge_tag=tag_arr, cell_edges=cell_edges, area=area,
                   vertex_class=vclass, boundary_records=tuple(records))

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edge_cells)

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)

    @property
    def node_coords(self) -> np.ndarray:
        """(nc, 3, 2) coordinates of the nodal (vertex) points per cell."""
        return self.vertices[self.cells]

    # cached derived arrays -------------------------------------------------
    def _cached(self, name, fn):
        cache = self.__dict__.setdefault("_cache", {})
        if name not in cache:
            cache[name] = fn()
        return cache[name]

    @property
    def basis_gradients(self) -> np.ndarray:
        """(nc, 3, 2) constant gradients of the three P1 Lagrange functions."""
        def compute():
            p = self.node_coords
            twice = 2.0 * self.area[:, None]
            grads = np.empty((self.n_cells, 3, 2))
            for k in range(3):
                i, j = (k + 1) % 3, (k + 2) % 3
                grads[:, k, 0] = (p[:, i, 1] - p[:, j, 1]) / twice[:, 0]
                grads[:, k, 1] = (p[:, j, 0] - p[:, i, 0]) / twice[:, 0]
            return grads
        return self._cached("grads", compute)

    @property
    def edge_neighbors(self) -> np.ndarray:
        """(nc, 3) cell across each local edge, -1 on a physical boundary."""
        def compute():
            ec = self.edge_cells[self.cell_edges]          # (nc, 3, 2)
            me = np.arange(self.n_cells)[:, None]
            other = np.where(ec[..., 0] == me, ec[..., 1], ec[..., 0])
            # a cell paired with itself through a periodic edge
            both = (ec[..., 0] == me) & (ec[..., 1] == me)
            return np.where(both, me, other)
        return self._cached("enb", compute)

    def stencil(self, variant: str) -> np.ndarray:
        """Padded (nc, k) neighbourhood array including the cell itself.

        Padding repeats the cell's own index, so reductions such as
        ``values[stencil].min(axis=1)`` need no masking.
        """
        if variant not in ("edge", "vertex"):
            raise ValueError(f"unknown neighbourhood variant {variant!r}")

        def compute():
            nc = self.n_cells
            me = np.arange(nc)
            if variant == "edge":
                nb = self.edge_neighbors
                return np.column_stack([me, np.where(nb >= 0, nb, me[:, None])])
            cls_of = self.vertex_class[self.cells]            # (nc, 3)
            flat_cls = cls_of.ravel()
            flat_cell = np.repeat(me, 3)
            order = np.argsort(flat_cls, kind="stable")
            sc, scell = flat_cls[order], flat_cell[order]
            ids, start, cnt = np.unique(sc, return_index=True, return_counts=True)
            pos = np.searchsorted(ids, flat_cls)
            reps = cnt[pos]
            owner = np.repeat(flat_cell, reps)
            offs = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
            nbr = scell[np.repeat(start[pos], reps) + offs]
            pair = np.unique(owner * nc + nbr)
            owner, nbr = pair // nc, pair % nc
            per = np.bincount(owner, minlength=nc)
            width = per.max()
            out = np.repeat(me[:, None], width, axis=1)
            col = np.arange(len(owner)) - np.repeat(np.cumsum(per) - per, per)
            out[owner, col] = nbr
            return out
        return self._cached("stencil_" + variant,
                            lambda: np.ascontiguousarray(compute(), dtype=np.int64))


def _find(parent, v):
    while parent[v] != v:
        parent[v] = parent[parent[v]]
        v = parent[v]
    return v


def _union(parent, a, b):
    ra, rb = _find(parent, a), _find(parent, b)
    if ra != rb:
        parent[max(ra, rb)] = min(ra, rb)


def _check_hanging_nodes(vertices, lo, hi):
    """Reject vertices lying strictly inside a boundary edge (hanging nodes)."""
    if len(lo) == 0:
        return
    cand = np.unique(np.concatenate([lo, hi]))
    q = vertices[cand]
    for start in range(0, len(lo), 512):
        a = vertices[lo[start:start + 512]][:, None, :]
        b = vertices[hi[start:start + 512]][:, None, :]
        d = b - a
        w = q[None, :, :] - a
        cross = d[..., 0] * w[..., 1] - d[..., 1] * w[..., 0]
        L2 = (d ** 2).sum(-1)
        t = (d * w).sum(-1) / L2
        onseg = (np.abs(cross) <= 1e-10 * L2) & (t > 1e-10) & (t < 1 - 1e-10)
        if np.any(onseg):
            i, j = np.argwhere(onseg)[0]
            raise MeshError(
                f"hanging node: vertex {cand[j]} lies inside edge "
                f"({lo[start + i]}, {hi[start + i]})")


def _match_periodic(vertices, uniq, nv, ids, tag):
    """Pair periodic boundary edges related by an axis-aligned translation."""
    lo, hi = uniq[ids] // nv, uniq[ids] % nv
    mid = 0.5 * (vertices[lo] + vertices[hi])
    if len(ids) % 2:
        raise MeshError(f"{tag}: odd number of periodic edges")
    span = np.ptp(vertices, axis=0).max()
    tol = 1e-9 * span
    for axis in (0, 1):
        c = mid[:, axis]
        cmin, cmax = c.min(), c.max()
        side_a = np.abs(c - cmin) <= tol
        side_b = np.abs(c - cmax) <= tol
        if cmax - cmin <= tol or not np.all(side_a | side_b) or side_a.sum() != side_b.sum():
            continue
        shift = np.zeros(2)
        shift[axis] = cmax - cmin
        other = 1 - axis
        ia, ib = np.flatnonzero(side_a), np.flatnonzero(side_b)
        ia = ia[np.argsort(mid[ia, other])]
        ib = ib[np.argsort(mid[ib, other])]
        pairs = []
        for a_, b_ in zip(ia, ib):
            va = (lo[a_], hi[a_])
            vb = (lo[b_], hi[b_])
            vmap = []
            for u in va:
                target = vertices[u] + shift
                dist = [np.abs(vertices[w] - target).max() for w in vb]
                k = int(np.argmin(dist))
                if dist[k] > tol:
                    raise MeshError(f"{tag}: periodic edges do not match geometrically")
                vmap.append((int(u), int(vb[k])))
            if vmap[0][1] == vmap[1][1]:
                raise MeshError(f"{tag}: periodic edges do not match geometrically")
            pairs.append((ids[a_], ids[b_], vmap))
        return pairs
    raise MeshError(f"{tag}: periodic edges must be paired by an axis-aligned translation")


# ---------------------------------------------------------------------------
# construction

def build_uniform_mesh(domain, nx: int = 1, ny: int = 1, split: str = "two",
                       levels: int = 0, boundary=None) -> Mesh:
    """Structured triangulation of an axis-aligned rectangle.

    The rectangle ``domain = (x0, x1, y0, y1)`` is divided into ``nx * ny``
    sub-rectangles, each split into two triangles (diagonal from lower-left
    to upper-right) or four (both diagonals), and the result is uniformly
    refined ``levels`` times by red refinement, which quadruples the cell
    count per level.

    ``boundary`` maps each side (``left``, ``right``, ``bottom``, ``top``)
    to ``wall``, ``transparent``, ``inflow`` or ``periodic``.  Periodic
    sides must come in opposite pairs.
    """
    x0, x1, y0, y1 = map(float, domain)
    if not (x1 > x0 and y1 > y0):
        raise MeshError(f"degenerate rectangle {domain!r}")
    if levels < 0 or nx < 1 or ny < 1:
        raise MeshError("nx, ny must be >= 1 and levels >= 0")
    if split not in ("two", "four"):
        raise MeshError(f"unknown base split {split!r}")
    sides = {s: "wall" for s in SIDES}
    sides.update(boundary or {})
    for s, t in sides.items():
        if s not in SIDES:
            raise MeshError(f"unknown side {s!r}")
        if t not in ("wall", "transparent", "inflow", "periodic"):
            raise MeshError(f"unknown boundary tag {t!r} for side {s}")
    if (sides["left"] == "periodic") != (sides["right"] == "periodic") or \
            (sides["bottom"] == "periodic") != (sides["top"] == "periodic"):
        raise MeshError("periodic sides must be paired (left/right, bottom/top)")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    verts = [np.column_stack([X.ravel(), Y.ravel()])]
    vid = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    v00 = vid[:-1, :-1].ravel()
    v10 = vid[:-1, 1:].ravel()
    v11 = vid[1:, 1:].ravel()
    v01 = vid[1:, :-1].ravel()
    if split == "two":
        cells = np.concatenate([np.stack([v00, v10, v11], 1),
                                np.stack([v00, v11, v01], 1)])
        # interleave so that the two triangles of a square are adjacent in index
        cells = cells.reshape(2, -1, 3).transpose(1, 0, 2).reshape(-1, 3)
    else:
        cx = 0.5 * (xs[:-1] + xs[1:])
        cy = 0.5 * (ys[:-1] + ys[1:])
        CX, CY = np.meshgrid(cx, cy, indexing="xy")
        c = len(verts[0]) + np.arange(nx * ny)
        verts.append(np.column_stack([CX.ravel(), CY.ravel()]))
        cells = np.stack([np.stack([v00, v10, c], 1), np.stack([v10, v11, c], 1),
                          np.stack([v11, v01, c], 1), np.stack([v01, v00, c], 1)])
        cells = cells.transpose(1, 0, 2).reshape(-1, 3)
    vertices = np.concatenate(verts)
    for _ in range(levels):
        vertices, cells = refine(vertices, cells)

    # snap boundary coordinates exactly onto the rectangle
    span = max(x1 - x0, y1 - y0)
    for col, lo_, hi_ in ((0, x0, x1), (1, y0, y1)):
        vertices[np.abs(vertices[:, col] - lo_) < 1e-12 * span, col] = lo_
        vertices[np.abs(vertices[:, col] - hi_) < 1e-12 * span, col] = hi_

    boundary_tags = {}
    a = cells
    b = np.roll(cells, -1, axis=1)
    lo = np.minimum(a, b).ravel()
    hi = np.maximum(a, b).ravel()
    k, cnt = np.unique(lo * len(vertices) + hi, return_counts=True)
    nv = len(vertices)
    for key in k[cnt == 1]:
        va, vb = int(key // nv), int(key % nv)
        m = 0.5 * (vertices[va] + vertices[vb])
        if m[0] == x0:
            side, pid = "left", "x"
        elif m[0] == x1:
            side, pid = "right", "x"
        elif m[1] == y0:
            side, pid = "bottom", "y"
        else:
            side, pid = "top", "y"
        t = sides[side]
        boundary_tags[(va, vb)] = f"periodic:{pid}" if t == "periodic" else t
    return Mesh.from_cells(vertices, cells, boundary_tags)


def refine(vertices, cells):
    """One level of uniform red refinement (each triangle into four)."""
    nv = len(vertices)
    nc = len(cells)
    a = cells
    b = np.roll(cells, -1, axis=1)
    lo = np.minimum(a, b).ravel()
    hi = np.maximum(a, b).ravel()
    uniq, inv = np.unique(lo * nv + hi, return_inverse=True)
    mids = 0.5 * (vertices[uniq // nv] + vertices[uniq % nv])
    m = (nv + inv).reshape(nc, 3)       # m[:, k] is the midpoint of local edge k
    v0, v1, v2 = cells.T
    m01, m12, m20 = m.T
    children = np.stack([
        np.stack([v0, m01, m20], 1),
        np.stack([m01, v1, m12], 1),
        np.stack([m20, m12, v2], 1),
        np.stack([m01, m12, m20], 1),
    ], axis=1).reshape(-1, 3)
    return np.concatenate([vertices, mids]), children


# ---------------------------------------------------------------------------
# queries

def cfl_radius(mesh: Mesh, metric: str = "inradius") -> np.ndarray:
    """Per-cell grid length scale for the CFL condition.

    Each vertex receives the minimum of a per-triangle length over its
    incident triangles, and each cell the minimum over its three vertices.
    ``metric="inradius"`` uses the triangle inradius (area / semi-perimeter).
    ``metric="patch"`` uses the altitude from the vertex, i.e. the radius of
    the largest circle centred at the vertex that fits inside its patch of
    surrounding triangles.
    """
    p = mesh.node_coords
    elen = np.stack([np.linalg.norm(p[:, (k + 1) % 3] - p[:, k], axis=1)
                     for k in range(3)], axis=1)
    if metric == "inradius":
        per_node = np.repeat((mesh.area / (0.5 * elen.sum(axis=1)))[:, None], 3, axis=1)
    elif metric == "patch":
        # altitude from node k onto the opposite edge (local edge k+1)
        per_node = 2.0 * mesh.area[:, None] / elen[:, [1, 2, 0]]
    else:
        raise ValueError(f"unknown CFL metric {metric!r}")
    rho = np.full(mesh.n_vertices, np.inf)
    np.minimum.at(rho, mesh.cells.ravel(), per_node.ravel())
    return rho[mesh.cells].min(axis=1)


def neighborhood(mesh: Mesh, cell: int, variant: str = "vertex") -> set[int]:
    """The cell itself plus all cells sharing an edge (or a vertex) with it."""
    if not 0 <= cell < mesh.n_cells:
        raise IndexError(f"cell {cell} out of range")
    return set(int(c) for c in mesh.stencil(variant)[cell])


def locate(mesh: Mesh, points) -> np.ndarray:
    """Index of the lowest-numbered cell containing each point, -1 if none."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    p = mesh.node_coords
    out = -np.ones(len(points), dtype=np.int64)
    span = np.ptp(mesh.vertices, axis=0).max()
    tol = 1e-12 * span * span
    for i, q in enumerate(points):
        ok = np.ones(mesh.n_cells, dtype=bool)
        for k in range(3):
            a, b = p[:, k], p[:, (k + 1) % 3]
            cross = (b[:, 0] - a[:, 0]) * (q[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (q[0] - a[:, 0])
            ok &= cross >= -tol
        hit = np.flatnonzero(ok)
        if len(hit):
            out[i] = hit[0]
    return out


def barycentric(mesh: Mesh, cell: int, point) -> np.ndarray:
    p = mesh.vertices[mesh.cells[cell]]
    T = np.array([[p[0, 0] - p[2, 0], p[1, 0] - p[2, 0]],
                  [p[0, 1] - p[2, 1], p[1, 1] - p[2, 1]]])
    l01 = np.linalg.solve(T, np.asarray(point, dtype=float) - p[2])
    return np.array([l01[0], l01[1], 1.0 - l01.sum()])


# ---------------------------------------------------------------------------
# file format

def save_mesh(mesh: Mesh, path) -> None:
    """Write the plain-text VERTICES / CELLS / BOUNDARY format."""
    lines = [f"VERTICES {mesh.n_vertices}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines.append(f"CELLS {mesh.n_cells}")
    lines += [f"{a} {b} {c}" for a, b, c in mesh.cells.tolist()]
    lines.append(f"BOUNDARY {len(mesh.boundary_records)}")
    lines += [f"{a} {b} {t}" for a, b, t in mesh.boundary_records]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path) -> Mesh:
    """Read a mesh file; raises :class:`MeshError` on malformed content."""
    text = Path(path).read_text().splitlines()
    rows = [ln.split("#", 1)[0].strip() for ln in text]
    rows = [r for r in rows if r]
    sections = {}
    i = 0
    while i < len(rows):
        head = rows[i].split()
        if len(head) != 2 or head[0] not in ("VERTICES", "CELLS", "BOUNDARY"):
            raise MeshError(f"expected section header, got {rows[i]!r}")
        try:
            n = int(head[1])
        except ValueError:
            raise MeshError(f"bad count in header {rows[i]!r}") from None
        body = rows[i + 1:i + 1 + n]
        if len(body) != n:
            raise MeshError(f"section {head[0]} truncated")
        sections[head[0]] = body
        i += 1 + n
    for name in ("VERTICES", "CELLS"):
        if name not in sections:
            raise MeshError(f"missing section {name}")
    try:
        verts = np.array([[float(t) for t in r.split()] for r in sections["VERTICES"]])
        cells = np.array([[int(t) for t in r.split()] for r in sections["CELLS"]])
    except ValueError as exc:
        raise MeshError(f"malformed numeric entry: {exc}") from None
    if verts.ndim != 2 or verts.shape[1] != 2 or cells.ndim != 2 or cells.shape[1] != 3:
        raise MeshError("VERTICES rows need 2 values and CELLS rows 3 indices")
    boundary = {}
    for r in sections.get("BOUNDARY", []):
        parts = r.split()
        if len(parts) != 3:
            raise MeshError(f"malformed boundary row {r!r}")
        boundary[(int(parts[0]), int(parts[1]))] = _parse_tag(parts[2])
    return Mesh.from_cells(verts, cells, boundary)
