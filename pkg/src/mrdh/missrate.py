"""Reuse distance histogram -> LRU miss rate.

The expected stack distance of a reuse epoch of length ``d`` is the number of
intervening references whose own forward reuse reaches past the end of the
window; a reference misses in an LRU cache of ``C`` lines iff that expected
stack distance is at least ``C``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CacheGeometry
from .histogram import Histogram1D


class EmptyHistogram(ValueError):
    pass


@dataclass
class MissRateReport:
    miss_rate: float
    misses: float
    accesses: float
    cold_misses: float
    capacity_lines: int

    def csv_row(self) -> str:
        return (f"{self.miss_rate:.6f},{self.misses:.6f},{self.accesses:.6f},"
                f"{self.cold_misses:.6f},{self.capacity_lines}")

    def text(self) -> str:
        return "\n".join([
            f"capacity_lines {self.capacity_lines}",
            f"accesses {self.accesses:.6f}",
            f"misses {self.misses:.6f}",
            f"cold_misses {self.cold_misses:.6f}",
            f"miss_rate {self.miss_rate:.6f}",
        ])


def expected_stack_distances(rdh: Histogram1D) -> np.ndarray:
    """``esd[d]`` for every bin ``d`` of ``rdh`` in one suffix-sum pass."""
    bins = rdh.bins.astype(np.float64)
    total = bins.sum() + float(rdh.cold)
    if total <= 0:
        raise EmptyHistogram("histogram holds no references")
    # beyond[j] = P(RD > j)
    tail = np.cumsum(bins[::-1])[::-1]
    beyond = (np.concatenate([tail[1:], [0.0]]) + float(rdh.cold)) / total
    esd = np.zeros_like(bins)
    esd[1:] = np.cumsum(beyond)[:-1]
    return esd


def expected_stack_distance(d: int, rdh: Histogram1D) -> float:
    if d <= 0:
        return 0.0
    esd = expected_stack_distances(rdh)
    if d < len(esd):
        return float(esd[d])
    # past the last bar every P(RD > j) equals the cold share
    last = len(esd) - 1
    return float(esd[last] + (d - last) * float(rdh.cold) / rdh.total)


def miss_rate_for_lines(rdh: Histogram1D, capacity_lines: int) -> MissRateReport:
    esd = expected_stack_distances(rdh)
    bins = rdh.bins.astype(np.float64)
    cold = float(rdh.cold)
    misses = cold + float(bins[esd >= capacity_lines].sum())
    accesses = float(bins.sum()) + cold
    return MissRateReport(misses / accesses, misses, accesses, cold, int(capacity_lines))


def miss_rate(rdh: Histogram1D, cache: CacheGeometry | int) -> MissRateReport:
    """LRU miss rate of a fully-associative cache with the same line capacity as ``cache``."""
    lines = cache if isinstance(cache, int) else cache.lines
    return miss_rate_for_lines(rdh, lines)
