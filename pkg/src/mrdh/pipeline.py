"""End-to-end composition: trace -> profiles -> upstream -> coherence -> MRDH -> miss rate.

Also hosts the model-vs-simulator comparison and the design-space sweep.
"""

from __future__ import annotations

import csv
import io
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coherence import CoherenceInputs, CoherenceResult, coherence_all
from .geometry import CacheGeometry, GeometryError, size_label
from .histogram import DEFAULT_CAP, AddressHistogram, Histogram1D
from .missrate import MissRateReport, miss_rate
from .oracle import SimConfig, SimStats, profile_merged_l2, reuse_histogram, simulate
from .profiler import CoreProfile, profile_trace
from .shared import MRDHResult, SharedModelInputs, build_mrdh
from .trace import Trace
from .upstream import derive_l2_inputs


def config_label(l1: CacheGeometry, l2: CacheGeometry) -> str:
    """``<l1>-<l2>-<a1>-<a2>``, e.g. ``16k-64k-2-8``."""
    return f"{size_label(l1.size)}-{size_label(l2.size)}-{l1.associativity}-{l2.associativity}"


@dataclass
class ModelReport:
    label: str
    l1: CacheGeometry
    l2: CacheGeometry
    coherence: list[CoherenceResult]
    shared: MRDHResult
    insertion_only: MRDHResult
    l2_miss: MissRateReport
    l2_miss_insertion_only: MissRateReport

    @property
    def core_count(self) -> int:
        return len(self.shared.stretch)

    def text(self) -> str:
        out = [f"# model report {self.label}", f"cores {self.core_count}"]
        if self.core_count > 1:
            out.append("[coherence]")
            out.append("core baseline_misses coherence_misses refined_misses p_same_write")
            for c in self.coherence:
                out.append(f"{c.core} {c.baseline_misses:.6f} {c.miss_coherence:.6f} "
                           f"{c.refined_l1_misses:.6f} {c.p_same_write:.6f}")
            out.append("[sharing]")
            out.extend(self.shared.summary_lines())
        else:
            c = self.coherence[0]
            out.append(f"l1_misses {c.baseline_misses:.6f}")
        out.append("[l2]")
        out.append(self.l2_miss.text())
        out.append(f"miss_rate_insertion_only {self.l2_miss_insertion_only.miss_rate:.6f}")
        out.append("[mrdh]")
        out.extend(self.shared.mrdh.to_lines())
        return "\n".join(out) + "\n"


def run_model(profiles: list[CoreProfile], l2: CacheGeometry, merged_cap: int | None = None,
              scope: str = "cache", epoch: str = "gaps") -> ModelReport:
    if not profiles:
        raise ValueError("no profiles given")
    l1 = profiles[0].geometry
    if any(p.geometry != l1 for p in profiles):
        raise GeometryError("profiles were taken with different L1 geometries")
    if l1.line_size != l2.line_size:
        raise GeometryError("L1 and L2 line sizes differ")
    coh = coherence_all(CoherenceInputs(profiles, l1, scope, epoch))
    ups = [derive_l2_inputs(p, l1) for p in profiles]
    inputs = SharedModelInputs([u.l2_rdh for u in ups], [u.l2_aad for u in ups], l2,
                               merged_cap, scope)
    full = build_mrdh(inputs)
    plain = build_mrdh(inputs, sharing=False)
    return ModelReport(config_label(l1, l2), l1, l2, coh, full, plain,
                       miss_rate(full.mrdh, l2), miss_rate(plain.mrdh, l2))


def l2_inputs_from_stats(stats: SimStats, core_count: int, line_size: int,
                         cap: int = DEFAULT_CAP) -> tuple[list[Histogram1D], list[AddressHistogram]]:
    """Per-core L2 reuse histograms and address histograms of a captured L2 stream.

    These are the shared model's inputs taken from simulation rather than from
    the upstream model.
    """
    if stats.l2_stream is None:
        raise ValueError("L2 stream was not captured")
    lines = np.asarray(stats.l2_stream, dtype=np.int64)
    cores = np.asarray(stats.l2_stream_cores, dtype=np.int64)
    rdhs, aads = [], []
    for c in range(core_count):
        mine = lines[cores == c]
        rdhs.append(reuse_histogram(mine.tolist(), cap))
        a = AddressHistogram()
        for ln, cnt in zip(*np.unique(mine, return_counts=True)):
            a.entries[int(ln) * line_size] = int(cnt)
        aads.append(a)
    return rdhs, aads


@dataclass
class Comparison:
    label: str
    model: ModelReport
    stats: SimStats
    ground_truth: MissRateReport
    oracle_l1_misses: list[int] = field(default_factory=list)

    @property
    def error(self) -> float:
        """Absolute miss-rate error of the full model against the profiled L2 stream."""
        return abs(self.model.l2_miss.miss_rate - self.ground_truth.miss_rate)

    @property
    def error_insertion_only(self) -> float:
        return abs(self.model.l2_miss_insertion_only.miss_rate - self.ground_truth.miss_rate)

    def table(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "core", "model", "oracle", "abs_error", "rel_error"])
        for c, m in zip(self.model.coherence, self.oracle_l1_misses):
            for name, val in (("l1_misses_baseline", c.baseline_misses),
                              ("l1_misses_refined", c.refined_l1_misses)):
                rel = abs(val - m) / m if m else float("nan")
                w.writerow([name, c.core, f"{val:.6f}", m, f"{abs(val - m):.6f}", f"{rel:.6f}"])
        gt = self.ground_truth.miss_rate
        for name, mr in (("l2_miss_rate", self.model.l2_miss.miss_rate),
                         ("l2_miss_rate_insertion_only", self.model.l2_miss_insertion_only.miss_rate)):
            w.writerow([name, "all", f"{mr:.6f}", f"{gt:.6f}", f"{abs(mr - gt):.6f}",
                        f"{abs(mr - gt) / gt if gt else float('nan'):.6f}"])
        w.writerow(["l2_miss_rate_simulated", "all", "", f"{self.stats.l2_miss_rate:.6f}", "", ""])
        return buf.getvalue()


def compare(trace: Trace, l1: CacheGeometry, l2: CacheGeometry, cap: int = DEFAULT_CAP,
            merged_cap: int | None = None, scope: str = "cache",
            epoch: str = "gaps") -> Comparison:
    profiles = profile_trace(trace, l1, cap)
    report = run_model(profiles, l2, merged_cap, scope, epoch)
    stats = simulate(trace, SimConfig(l1, l2), capture_l2=True)
    truth = miss_rate(profile_merged_l2(stats, report.shared.mrdh.cap), l2)
    return Comparison(report.label, report, stats, truth, [c.l1_misses for c in stats.cores])


# --- design-space sweep ------------------------------------------------------

@dataclass
class SweepSpec:
    """Grid of ``(l1_size, l1_assoc, l2_size, l2_assoc)`` points, sizes in bytes."""

    grid: list[tuple[int, int, int, int]]
    line_size: int = 64
    cap: int = DEFAULT_CAP
    scope: str = "cache"

    def geometries(self) -> list[tuple[CacheGeometry, CacheGeometry]]:
        if not self.grid:
            raise InvalidGrid("empty grid")
        out = []
        for point in self.grid:
            try:
                l1s, a1, l2s, a2 = point
                out.append((CacheGeometry(l1s, a1, self.line_size),
                            CacheGeometry(l2s, a2, self.line_size)))
            except (GeometryError, ValueError, TypeError) as e:
                raise InvalidGrid(f"bad grid point {point}: {e}") from None
        return out

    @classmethod
    def cross(cls, l1_sizes, l1_assocs, l2_sizes, l2_assocs, **kw) -> "SweepSpec":
        return cls(list(itertools.product(l1_sizes, l1_assocs, l2_sizes, l2_assocs)), **kw)


class InvalidGrid(ValueError):
    pass


K, M = 1 << 10, 1 << 20


def default_grid() -> list[tuple[int, int, int, int]]:
    """57 points: L1 16KB..256KB (2-way), L2 32KB..4MB at 8/16/64 ways, L2 > L1."""
    pairs = {
        16 * K: [32 * K, 64 * K, 128 * K, 256 * K, 512 * K, 1 * M, 2 * M, 4 * M],
        64 * K: [128 * K, 256 * K, 512 * K, 1 * M, 2 * M, 4 * M],
        128 * K: [4 * M],
        256 * K: [512 * K, 1 * M, 2 * M, 4 * M],
    }
    return [(l1, 2, l2, a2) for l1, l2s in pairs.items() for l2 in l2s for a2 in (8, 16, 64)]


@dataclass
class SweepRow:
    label: str
    l1: CacheGeometry
    l2: CacheGeometry
    l2_misses: float
    l2_miss_rate: float

    @property
    def total_capacity(self) -> int:
        return self.l1.size + self.l2.size


def run_sweep(trace: Trace, spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    points = spec.geometries()
    profiles = {}
    for l1, _ in points:
        if l1 not in profiles:
            profiles[l1] = profile_trace(trace, l1, spec.cap)
    ups = {l1: [derive_l2_inputs(p, l1) for p in ps] for l1, ps in profiles.items()}

    def evaluate(point):
        l1, l2 = point
        u = ups[l1]
        inputs = SharedModelInputs([x.l2_rdh for x in u], [x.l2_aad for x in u], l2,
                                   scope=spec.scope)
        rep = miss_rate(build_mrdh(inputs).mrdh, l2)
        return SweepRow(config_label(l1, l2), l1, l2, rep.misses, rep.miss_rate)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(evaluate, points))
    else:
        rows = [evaluate(p) for p in points]
    rows.sort(key=lambda r: (r.total_capacity, r.label))
    return rows


def sweep_csv(rows: list[SweepRow]) -> str:
    out = ["config_label,l2_misses,l2_miss_rate"]
    out += [f"{r.label},{r.l2_misses:.6f},{r.l2_miss_rate:.6f}" for r in rows]
    return "\n".join(out) + "\n"
