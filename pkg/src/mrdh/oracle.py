"""Exact trace-driven simulator: N private LRU L1s with MESI write-invalidate
coherence in front of one shared LRU L2.

Write-back, write-allocate.  The L2 is non-inclusive and never back-invalidates.
Invalidated lines stay resident (state ``I``) in their LRU slot; touching one
is a coherence miss.  With ``coherence_fetch_bypasses_l2`` set, the refill of
a coherence miss comes from a peer cache or memory and leaves the L2 alone.
Write-backs of dirty lines are not modelled as L2 traffic.
"""

from __future__ import annotations

import csv
import io
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .geometry import CacheGeometry
from .histogram import DEFAULT_CAP, Histogram1D
from .trace import Trace

M, E, S, I = "M", "E", "S", "I"


class StreamNotCaptured(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    l1: CacheGeometry
    l2: CacheGeometry
    coherence_fetch_bypasses_l2: bool = True

    def __post_init__(self):
        if self.l1.line_size != self.l2.line_size:
            raise ValueError("L1 and L2 line sizes must match")

    def label(self) -> str:
        return (f"{self.l1.label()}-{self.l2.label()}-"
                f"{self.l1.associativity}-{self.l2.associativity}")


@dataclass
class CoreStats:
    l1_accesses: int = 0
    l1_hits: int = 0
    l1_misses: int = 0
    coherence_misses: int = 0
    cold_misses: int = 0


@dataclass
class SimStats:
    cores: list[CoreStats]
    l2_accesses: int = 0
    l2_hits: int = 0
    l2_misses: int = 0
    l2_stream: list[int] | None = None
    l2_stream_cores: list[int] | None = None

    @property
    def l2_miss_rate(self) -> float:
        return self.l2_misses / self.l2_accesses if self.l2_accesses else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "core", "accesses", "hits", "misses", "coherence_misses",
                    "cold_misses", "miss_rate"])
        for i, c in enumerate(self.cores):
            mr = c.l1_misses / c.l1_accesses if c.l1_accesses else 0.0
            w.writerow(["L1", i, c.l1_accesses, c.l1_hits, c.l1_misses,
                        c.coherence_misses, c.cold_misses, f"{mr:.6f}"])
        w.writerow(["L2", "all", self.l2_accesses, self.l2_hits, self.l2_misses, "", "",
                    f"{self.l2_miss_rate:.6f}"])
        return buf.getvalue()


def simulate(trace: Trace, cfg: SimConfig, capture_l2: bool = False,
             on_step=None) -> SimStats:
    """Run ``trace`` through the hierarchy.

    ``on_step``, if given, is called after every reference with the per-core
    L1 contents (``caches[core][set]`` maps line -> MESI state).
    """
    ncores = trace.core_count
    l1g, l2g = cfg.l1, cfg.l2
    n1, a1, n2, a2 = l1g.set_count, l1g.associativity, l2g.set_count, l2g.associativity
    l1 = [[OrderedDict() for _ in range(n1)] for _ in range(ncores)]
    l2 = [OrderedDict() for _ in range(n2)]
    touched = [set() for _ in range(ncores)]
    stats = SimStats([CoreStats() for _ in range(ncores)])
    stream: list[int] = []
    stream_cores: list[int] = []
    bypass = cfg.coherence_fetch_bypasses_l2

    lines = (trace.addr // np.uint64(l1g.line_size)).astype(np.int64).tolist()
    for c, is_write, line in zip(trace.core.tolist(), trace.is_write.tolist(), lines):
        cs = stats.cores[c]
        cs.l1_accesses += 1
        sidx = line % n1
        cset = l1[c][sidx]
        st = cset.get(line)
        peers = [l1[o][sidx] for o in range(ncores) if o != c]

        if st is not None and st != I:
            cs.l1_hits += 1
            if is_write and st != M:
                if st == S:
                    _invalidate(peers, line)
                cset[line] = M
            cset.move_to_end(line)
            if on_step is not None:
                on_step(l1)
            continue

        cs.l1_misses += 1
        coherence = st == I
        if coherence:
            cs.coherence_misses += 1
        else:
            if line not in touched[c]:
                cs.cold_misses += 1
            if len(cset) >= a1:
                cset.popitem(last=False)
        touched[c].add(line)

        if not (coherence and bypass):
            stats.l2_accesses += 1
            l2set = l2[line % n2]
            if line in l2set:
                stats.l2_hits += 1
                l2set.move_to_end(line)
            else:
                stats.l2_misses += 1
                if len(l2set) >= a2:
                    l2set.popitem(last=False)
                l2set[line] = True
            if capture_l2:
                stream.append(line)
                stream_cores.append(c)

        if is_write:
            _invalidate(peers, line)
            new = M
        else:
            shared = False
            for p in peers:
                ps = p.get(line)
                if ps is not None and ps != I:
                    p[line] = S
                    shared = True
            new = S if shared else E
        cset[line] = new
        cset.move_to_end(line)
        if on_step is not None:
            on_step(l1)

    if capture_l2:
        stats.l2_stream = stream
        stats.l2_stream_cores = stream_cores
    return stats


def _invalidate(peers, line: int) -> None:
    for p in peers:
        if p.get(line, I) != I:
            p[line] = I


def reuse_histogram(stream, cap: int) -> Histogram1D:
    """Global reuse distance histogram of a line-number stream."""
    h = Histogram1D.zeros(cap)
    last: dict[int, int] = {}
    for i, line in enumerate(stream):
        prev = last.get(line)
        h.add(None if prev is None else i - prev - 1)
        last[line] = i
    return h


def profile_merged_l2(stats: SimStats, cap: int = 8 * DEFAULT_CAP) -> Histogram1D:
    """Ground-truth MRDH of the captured shared-cache reference stream."""
    if stats.l2_stream is None:
        raise StreamNotCaptured("simulate with capture_l2=True to profile the L2 stream")
    return reuse_histogram(stats.l2_stream, cap)
