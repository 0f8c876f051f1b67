"""L1 profile -> L2-bound reuse distance histogram.

Two filtering steps turn a core's L1 RDH into the RDH of the references it
leaks to L2: drop the references predicted to hit (via the normalized RST
table), then shorten every surviving epoch by the number of intervening L1
hits (via the normalized Hit-RDH table).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CacheGeometry
from .histogram import AddressHistogram, Histogram1D, Table2D
from .profiler import CoreProfile


@dataclass
class NormalizedTable:
    rows: np.ndarray
    row_defined: np.ndarray

    @property
    def cap(self) -> int:
        return self.rows.shape[0] - 1


def normalize_rows(table: Table2D | np.ndarray) -> NormalizedTable:
    """Divide every row by its total; all-zero rows are left undefined (zeros)."""
    cells = np.asarray(table.cells if isinstance(table, Table2D) else table, dtype=np.float64)
    totals = cells.sum(axis=1)
    defined = totals > 0
    rows = np.zeros_like(cells)
    rows[defined] = cells[defined] / totals[defined, None]
    return NormalizedTable(rows, defined)


def miss_rdh(l1_rdh: Histogram1D, p_rs: NormalizedTable, assoc: int) -> Histogram1D:
    """References of each reuse-distance bin expected to miss in an ``assoc``-way LRU L1."""
    bins = l1_rdh.bins.astype(np.float64)
    hit_frac = p_rs.rows[:, :max(assoc, 0)].sum(axis=1)
    out = np.where(p_rs.row_defined, bins * (1.0 - hit_frac), 0.0)
    if assoc <= 0:
        out = bins.copy()
    return Histogram1D(np.clip(out, 0.0, None), float(l1_rdh.cold))


def l2_rdh(miss: Histogram1D, p_nhit: NormalizedTable) -> Histogram1D:
    """Migrate each miss bar ``rd`` down by the expected number of intervening L1 hits."""
    src = miss.bins.astype(np.float64)
    out = np.zeros_like(src)
    for rd in np.flatnonzero(src):
        if not p_nhit.row_defined[rd]:
            out[rd] += src[rd]
            continue
        n = np.arange(rd + 1)
        # bar rd - n receives the epochs with n hits inside
        out[rd - n] += src[rd] * p_nhit.rows[rd, :rd + 1]
    return Histogram1D(out, float(miss.cold))


@dataclass
class L2Inputs:
    l2_rdh: Histogram1D
    l2_aad: AddressHistogram
    miss_rdh: Histogram1D | None = None


def derive_l2_inputs(profile: CoreProfile, l1: CacheGeometry | None = None) -> L2Inputs:
    l1 = l1 or profile.geometry
    p_rs = normalize_rows(profile.rst)
    p_nhit = normalize_rows(profile.hit_rdh)
    m = miss_rdh(profile.l1_rdh, p_rs, l1.associativity)
    return L2Inputs(l2_rdh(m, p_nhit), profile.l2_aad.copy(), m)
