"""Expected private-cache coherence misses under write-invalidate.

A reference predicted to hit in L1 turns into a coherence miss when some
other core wrote its line during the reuse epoch.  Every non-target core is
folded into one virtual core, so the dual-core and N-core cases share a
single code path.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .geometry import CacheGeometry
from .histogram import AddressHistogram
from .profiler import CoreProfile


SCOPES = ("cache", "set")
EPOCHS = ("gaps", "literal")


@dataclass
class CoherenceInputs:
    """Per-core L1 profiles plus the shared L1 geometry.

    ``scope`` picks the denominator of the other-core probability: ``"set"``
    counts only the other core's references to the address's own L1 set,
    ``"cache"`` counts all of them (the cache treated as one set), which is
    what matches global reuse distances.

    ``epoch`` sets how many other-core references an epoch of reuse distance
    ``r`` is exposed to.  ``"gaps"`` uses ``(r + 1) * ratio``: an epoch with
    ``r`` intervening own references has ``r + 1`` gaps a foreign write can
    fall into, so back-to-back reuses (``r = 0``) can still be invalidated.
    ``"literal"`` uses ``r * ratio``.
    """

    profiles: list[CoreProfile]
    l1: CacheGeometry
    scope: str = "cache"
    epoch: str = "gaps"

    def __post_init__(self):
        if self.scope not in SCOPES:
            raise ValueError(f"scope must be one of {SCOPES}")
        if self.epoch not in EPOCHS:
            raise ValueError(f"epoch must be one of {EPOCHS}")

    @classmethod
    def from_profiles(cls, profiles: list[CoreProfile], scope: str = "cache",
                      epoch: str = "gaps") -> "CoherenceInputs":
        geoms = {p.geometry for p in profiles}
        if len(geoms) != 1:
            raise ValueError("all cores must share one L1 geometry")
        return cls(list(profiles), geoms.pop(), scope, epoch)

    def others(self, target: int) -> list[CoreProfile]:
        return [p for i, p in enumerate(self.profiles) if i != target]


@dataclass
class CoherenceResult:
    core: int
    p_same_write: float
    miss_coherence: float
    baseline_misses: float
    refined_l1_misses: float

    def normalized(self, observed_misses: float) -> float:
        """Model over observed miss ratio (1.0 is a perfect prediction)."""
        return self.refined_l1_misses / observed_misses if observed_misses else float("nan")


def same_address_probability(target_aad: AddressHistogram, target_total: float,
                             other_aad: AddressHistogram, other_hits: AddressHistogram,
                             geom: CacheGeometry, scope: str = "set") -> float:
    """Chance that a reference from the other side lands on a target epoch endpoint.

    Sums ``(target[a] / target_total) * (other_hits[a] / other_aad(set(a)))``
    over addresses touched by both.  ``other_hits`` is the other side's
    counts that matter (writes for coherence, all accesses for sharing).
    """
    if target_total <= 0:
        return 0.0
    nsets = geom.set_count if scope == "set" else 1
    set_totals = other_aad.set_totals(geom.line_size, nsets)
    p = 0.0
    for a in sorted(target_aad.entries):
        t = target_aad.entries[a]
        o = other_hits[a]
        if t <= 0 or o <= 0:
            continue
        denom = set_totals.get((a // geom.line_size) % nsets, 0)
        if denom > 0:
            p += (t / target_total) * (o / denom)
    return min(max(p, 0.0), 1.0)


def p_same_write(target: int, inputs: CoherenceInputs) -> float:
    prof = inputs.profiles[target]
    others = inputs.others(target)
    v_aad = AddressHistogram.sum(p.l1_aad for p in others)
    v_waad = AddressHistogram.sum(p.l1_waad for p in others)
    return same_address_probability(prof.l1_aad, prof.l1_access_total, v_aad, v_waad,
                                    inputs.l1, inputs.scope)


def p_split_write(r, p_same: float, access_ratio: float):
    """``1 - (1 - p_same) ** (r * access_ratio)``; ``r`` may be an array."""
    return 1.0 - np.power(1.0 - p_same, np.asarray(r, dtype=np.float64) * access_ratio)


def miss_coherence(target: int, inputs: CoherenceInputs, p_split=None) -> CoherenceResult:
    """Expected coherence misses of core ``target``.

    ``p_split`` overrides the per-distance split probability (array over
    reuse distances or scalar); by default it comes from ``p_split_write``.
    """
    prof = inputs.profiles[target]
    assoc = inputs.l1.associativity
    own = prof.l1_access_total
    other = sum(p.l1_access_total for p in inputs.others(target))
    ps = p_same_write(target, inputs)
    hits_by_r = prof.rst.cells[:, :assoc].sum(axis=1).astype(np.float64)
    if p_split is None:
        ratio = other / own if own else 0.0
        r = np.arange(len(hits_by_r)) + (1 if inputs.epoch == "gaps" else 0)
        p_split = p_split_write(r, ps, ratio)
    coh = float(np.sum(np.broadcast_to(p_split, hits_by_r.shape) * hits_by_r))
    base = prof.predicted_l1_misses()
    return CoherenceResult(prof.core, ps, coh, base, base + coh)


def coherence_all(inputs: CoherenceInputs) -> list[CoherenceResult]:
    return [miss_coherence(i, inputs) for i in range(len(inputs.profiles))]


def results_csv(results: list[CoherenceResult], observed: list[float] | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["core", "baseline_misses", "coherence_misses", "refined_misses", "normalized"])
    for i, r in enumerate(results):
        norm = "" if observed is None else f"{r.normalized(observed[i]):.6f}"
        w.writerow([r.core, f"{r.baseline_misses:.6f}", f"{r.miss_coherence:.6f}",
                    f"{r.refined_l1_misses:.6f}", norm])
    return buf.getvalue()
