"""Wet/dry classification of cells and the thin-layer velocity convention."""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class CellClass(IntEnum):
    WET = 0
    SEMI_DRY_PHYSICAL = 1
    SEMI_DRY_GRAVITY_OFF = 2
    DRY = 3


@dataclass(frozen=True)
class WetDryFlags:
    """Per-cell classes plus the per-node dry mask (``h < tol_wet``).

    ``gravity_off`` marks every cell with at least one dry node for which the
    local lake-at-rest criterion holds; for those cells the gravity volume
    terms are dropped.  This includes fully dry cells that satisfy the
    criterion, which are still reported with class ``DRY``.
    """

    cell_class: np.ndarray      # (nc,) int8 of CellClass
    dry_node: np.ndarray        # (nc, 3) bool
    gravity_off: np.ndarray     # (nc,) bool

    @property
    def n_gravity_off(self) -> int:
        return int(np.count_nonzero(self.cell_class == CellClass.SEMI_DRY_GRAVITY_OFF))


def classify_cells(h, b, tol_wet: float) -> WetDryFlags:
    """Classify cells from nodal depth ``h`` and nodal bathymetry ``b``.

    A cell with dry nodes is treated as a possible local lake at rest when
    ``max(H) - max(b) < tol_wet`` with ``H = h + b`` (strict inequality).
    For linear data the maxima over the cell are attained at the nodes.
    """
    if not tol_wet > 0:
        raise ValueError(f"tol_wet must be positive, got {tol_wet!r}")
    h = np.asarray(h, dtype=float)
    b = np.asarray(b, dtype=float)
    dry = h < tol_wet
    ndry = dry.sum(axis=-1)
    criterion = (h + b).max(axis=-1) - b.max(axis=-1) < tol_wet
    cls = np.full(ndry.shape, CellClass.WET, dtype=np.int8)
    semi = (ndry > 0) & (ndry < 3)
    cls[semi & criterion] = CellClass.SEMI_DRY_GRAVITY_OFF
    cls[semi & ~criterion] = CellClass.SEMI_DRY_PHYSICAL
    cls[ndry == 3] = CellClass.DRY
    return WetDryFlags(cell_class=cls, dry_node=dry, gravity_off=(ndry > 0) & criterion)


def nodal_velocity(h, m, tol_wet: float):
    """``m / h`` where ``h >= tol_wet`` and zero elsewhere (works elementwise)."""
    h = np.asarray(h, dtype=float)
    m = np.asarray(m, dtype=float)
    wet = h >= tol_wet
    out = np.divide(m, h, out=np.zeros(np.broadcast(h, m).shape), where=wet)
    return out if out.ndim else float(out)
