"""Merged reuse distance histogram (MRDH) of a shared cache.

The per-core L2-bound histograms are combined in two steps:

1. insertion: every reuse distance of core ``i`` is stretched by the
   references the other cores issue meanwhile, ``r_hat = r * (1 + other/own)``
   with access counts taken from the address histograms;
2. split: an epoch whose endpoint line is also touched by another core is
   cut short.  The expected number of split epochs per merged bar is moved
   evenly onto all lower bars.

With more than two cores every non-target core is folded into one virtual
core.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coherence import same_address_probability
from .geometry import CacheGeometry
from .histogram import AddressHistogram, Histogram1D

NEG_TOL = 1e-9


class ZeroAccess(ValueError):
    pass


class AllCoresSilent(ValueError):
    pass


@dataclass
class SharedModelInputs:
    l2_rdh: list[Histogram1D]
    l2_aad: list[AddressHistogram]
    l2: CacheGeometry
    merged_cap: int | None = None
    scope: str = "cache"

    def __post_init__(self):
        if len(self.l2_rdh) != len(self.l2_aad):
            raise ValueError("one RDH and one AAD per core required")
        if self.merged_cap is None:
            self.merged_cap = 8 * max(h.cap for h in self.l2_rdh)

    @property
    def core_count(self) -> int:
        return len(self.l2_rdh)

    def access(self, core: int) -> float:
        return float(self.l2_aad[core].total)

    def active_cores(self) -> list[int]:
        return [i for i in range(self.core_count) if self.access(i) > 0]


@dataclass
class Insertion:
    rdh_prime: Histogram1D
    contributions: list[np.ndarray]
    stretch: list[float | None]


@dataclass
class MRDHResult:
    mrdh: Histogram1D
    rdh_prime: Histogram1D
    p_same: list[float]
    stretch: list[float | None]
    split_mass: np.ndarray = field(repr=False, default=None)

    def summary_lines(self) -> list[str]:
        out = []
        for i, (f, p) in enumerate(zip(self.stretch, self.p_same)):
            fs = "inactive" if f is None else f"{f:.6f}"
            out.append(f"core {i} stretch {fs} p_same {p:.6f}")
        return out


def stretch_factor(target: int, inputs: SharedModelInputs) -> float:
    own = inputs.access(target)
    if own <= 0:
        raise ZeroAccess(f"core {target} issued no L2 accesses")
    other = sum(inputs.access(i) for i in range(inputs.core_count) if i != target)
    return 1.0 + other / own


def stretch_into(hist: Histogram1D, factor: float, merged_cap: int) -> np.ndarray:
    """Forward-map bins ``r -> r * factor``, splitting each count linearly over
    the two nearest integer bars.  Mass is conserved exactly."""
    out = np.zeros(merged_cap + 1)
    src = hist.bins.astype(np.float64)
    r_hat = np.arange(len(src)) * factor
    lo = np.floor(r_hat).astype(np.int64)
    frac = r_hat - lo
    over = lo >= merged_cap
    lo = np.minimum(lo, merged_cap)
    hi = np.minimum(lo + 1, merged_cap)
    w_hi = np.where(over, 0.0, frac)
    np.add.at(out, lo, src * (1.0 - w_hi))
    np.add.at(out, hi, src * w_hi)
    return out


def insertion_effect(inputs: SharedModelInputs) -> Insertion:
    m = inputs.merged_cap
    contributions, factors = [], []
    cold = 0.0
    for i in range(inputs.core_count):
        try:
            f = stretch_factor(i, inputs)
        except ZeroAccess:
            contributions.append(np.zeros(m + 1))
            factors.append(None)
            continue
        contributions.append(stretch_into(inputs.l2_rdh[i], f, m))
        factors.append(f)
        cold += float(inputs.l2_rdh[i].cold)
    rdh_prime = Histogram1D(np.sum(contributions, axis=0), cold)
    return Insertion(rdh_prime, contributions, factors)


def p_same(target: int, inputs: SharedModelInputs) -> float:
    """Probability that an inserted reference hits the endpoint line of a target epoch."""
    virtual = AddressHistogram.sum(a for i, a in enumerate(inputs.l2_aad) if i != target)
    return same_address_probability(inputs.l2_aad[target], inputs.access(target),
                                    virtual, virtual, inputs.l2, inputs.scope)


def split_counts(ins: Insertion, p_same_per_core: list[float]) -> np.ndarray:
    """Expected number of split epochs N on each merged bar."""
    n = np.zeros_like(ins.rdh_prime.bins)
    r_hat = np.arange(len(n), dtype=np.float64)
    for c, f, p in zip(ins.contributions, ins.stretch, p_same_per_core):
        if f is None or p <= 0:
            continue
        inserted = r_hat * (1.0 - 1.0 / f)
        n += c * (1.0 - np.power(1.0 - p, inserted))
    return n


def redistribute(rdh_prime: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Remove ``n[rd]`` from bar ``rd`` and spread it evenly over bars ``0..rd-1``."""
    share = np.zeros_like(n)
    share[1:] = n[1:] / np.arange(1, len(n))
    # received[k] = sum of share[rd] for rd > k
    received = np.concatenate([np.cumsum(share[::-1])[::-1][1:], [0.0]])
    out = rdh_prime - n + received
    # only rounding can push a bar below zero (n <= rdh_prime bar-wise)
    out[(out < 0) & (out > -NEG_TOL * max(1.0, float(rdh_prime.max(initial=0.0))))] = 0.0
    return out


def split_effect(ins: Insertion, p_same_per_core: list[float]) -> Histogram1D:
    n = split_counts(ins, p_same_per_core)
    return Histogram1D(redistribute(ins.rdh_prime.bins, n), ins.rdh_prime.cold)


def build_mrdh(inputs: SharedModelInputs, sharing: bool = True) -> MRDHResult:
    """Full two-step construction; ``sharing=False`` stops after the insertion step."""
    if not inputs.active_cores():
        raise AllCoresSilent("no core issued L2 accesses")
    ins = insertion_effect(inputs)
    ps = [p_same(i, inputs) if f is not None else 0.0 for i, f in enumerate(ins.stretch)]
    if not sharing:
        ps = [0.0] * len(ps)
    n = split_counts(ins, ps)
    mrdh = Histogram1D(redistribute(ins.rdh_prime.bins, n), ins.rdh_prime.cold)
    return MRDHResult(mrdh, ins.rdh_prime, ps, ins.stretch, n)
