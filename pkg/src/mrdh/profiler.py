"""Single-pass extraction of the locality metrics used by the models.

For every reference of one core's stream the profiler records

* the global reuse distance ``r`` (references since the previous access to
  the same line, any set),
* the per-set stack distance ``s`` (distinct lines of the same L1 set seen
  since that previous access), which decides the L1 LRU hit,
* the number ``n`` of L1 hits among the intervening references.

From these it fills the L1 RDH, the RST table (``r`` x ``s``), the Hit-RDH
table (``r`` x ``n``) and three address histograms: all accesses, writes,
and L1 misses (the L2-bound AAD).  Distances above ``cap`` clamp to ``cap``.
For a clamped epoch the recorded hit count is ``cap - min(misses, cap)``,
where ``misses`` counts the intervening L1 misses, so ``r - n`` still equals
the epoch's L2 distance whenever that distance fits under the cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import CacheGeometry
from .histogram import DEFAULT_CAP, AddressHistogram, Histogram1D, Table2D
from .trace import Trace


class GeometryMismatch(ValueError):
    pass


@dataclass
class CoreProfile:
    l1_rdh: Histogram1D
    rst: Table2D
    hit_rdh: Table2D
    l2_aad: AddressHistogram
    l1_aad: AddressHistogram
    l1_waad: AddressHistogram
    l1_access_total: int = 0
    l2_access_total: int = 0
    geometry: CacheGeometry | None = None
    core: int = 0

    @property
    def cap(self) -> int:
        return self.l1_rdh.cap

    @classmethod
    def empty(cls, cap: int = DEFAULT_CAP, geometry=None, core: int = 0) -> "CoreProfile":
        return cls(Histogram1D.zeros(cap), Table2D.zeros(cap, "rst"), Table2D.zeros(cap, "hit"),
                   AddressHistogram(), AddressHistogram(), AddressHistogram(),
                   geometry=geometry, core=core)

    def __eq__(self, other):
        if not isinstance(other, CoreProfile):
            return NotImplemented
        return (self.l1_rdh == other.l1_rdh and self.rst == other.rst
                and self.hit_rdh == other.hit_rdh and self.l2_aad == other.l2_aad
                and self.l1_aad == other.l1_aad and self.l1_waad == other.l1_waad
                and self.l1_access_total == other.l1_access_total
                and self.l2_access_total == other.l2_access_total)

    def predicted_l1_hits(self) -> float:
        a = self.geometry.associativity
        return float(self.rst.cells[:, :a].sum())

    def predicted_l1_misses(self) -> float:
        """Capacity/conflict plus cold misses implied by the RST table."""
        a = self.geometry.associativity
        return float(self.rst.cells[:, a:].sum() + self.l1_rdh.cold)


def profile_core(stream: Trace, l1: CacheGeometry, cap: int = DEFAULT_CAP,
                 core: int | None = None) -> CoreProfile:
    """Profile one core's reference stream against the L1 geometry ``l1``."""
    if stream.line_size_hint and stream.line_size_hint != l1.line_size:
        raise GeometryMismatch(
            f"trace line size {stream.line_size_hint} != L1 line size {l1.line_size}")
    if core is None:
        core = int(stream.core[0]) if len(stream) else 0
    if cap < l1.associativity:
        raise ValueError(f"cap {cap} below L1 associativity {l1.associativity}")
    prof = CoreProfile.empty(cap, l1, core)
    n = len(stream)
    if n == 0:
        return prof

    ls, nsets, assoc = l1.line_size, l1.set_count, l1.associativity
    lines = (stream.addr // np.uint64(ls)).astype(np.int64).tolist()
    writes = stream.is_write.tolist()

    rdh = prof.l1_rdh.bins
    rst, hit = prof.rst.cells, prof.hit_rdh.cells
    l1_aad, l1_waad, l2_aad = prof.l1_aad.entries, prof.l1_waad.entries, prof.l2_aad.entries

    last_pos: dict[int, int] = {}
    # per-set LRU stacks, most recent first; depth beyond cap is never needed
    stacks: list[list[int]] = [[] for _ in range(nsets)]
    hit_cum = [0] * (n + 1)  # hit_cum[i] = hits among references 0..i-1
    cold = 0

    for i, line in enumerate(lines):
        addr = line * ls
        l1_aad[addr] += 1
        if writes[i]:
            l1_waad[addr] += 1
        stack = stacks[line % nsets]
        prev = last_pos.get(line)
        if prev is None:
            cold += 1
            is_hit = False
        else:
            r = i - prev - 1
            try:
                s = stack.index(line)
                del stack[s]
            except ValueError:
                s = cap + 1  # deeper than the truncated stack
            is_hit = s < assoc
            nhit = hit_cum[i] - hit_cum[prev + 1]
            if r < cap:
                rc = r
            else:
                # keep the implied L2 distance (intervening misses) up to cap
                rc = cap
                nhit = cap - min(r - nhit, cap)
            rdh[rc] += 1
            rst[rc, s if s < rc else rc] += 1
            hit[rc, nhit] += 1
        stack.insert(0, line)
        if len(stack) > cap + 1:
            stack.pop()
        if not is_hit:
            l2_aad[addr] += 1
        hit_cum[i + 1] = hit_cum[i] + is_hit
        last_pos[line] = i

    prof.l1_rdh.cold = cold
    prof.l1_access_total = n
    prof.l2_access_total = n - hit_cum[n]
    return prof


def total_accesses(profile: CoreProfile, level: str = "L2") -> int:
    """L1 reference count, or the number of references leaked to L2."""
    if level.upper() == "L1":
        return profile.l1_access_total
    if level.upper() == "L2":
        return int(profile.l2_aad.total)
    raise ValueError(f"unknown level {level!r}")


def profile_trace(trace: Trace, l1: CacheGeometry, cap: int = DEFAULT_CAP) -> list[CoreProfile]:
    from .trace import split_by_core
    return [profile_core(s, l1, cap, core=c) for c, s in enumerate(split_by_core(trace))]


# --- serialization -----------------------------------------------------------

_SECTIONS = ("l1_rdh", "rst", "hit_rdh", "l2_aad", "l1_aad", "l1_waad")


def format_profile(p: CoreProfile) -> str:
    g = p.geometry
    out = ["# core profile",
           f"core {p.core}",
           f"geometry {g.size} {g.associativity} {g.line_size}",
           f"l1_access_total {p.l1_access_total}",
           f"l2_access_total {p.l2_access_total}"]
    for name in _SECTIONS:
        out.append(f"[{name}]")
        out.extend(getattr(p, name).to_lines())
    return "\n".join(out) + "\n"


def parse_profile(text: str) -> CoreProfile:
    header: dict[str, list[str]] = {}
    sections: dict[str, list[str]] = {}
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = []
        elif current is None:
            key, *vals = line.split()
            header[key] = vals
        else:
            sections[current].append(line)
    missing = [s for s in _SECTIONS if s not in sections]
    if missing or "geometry" not in header:
        raise ValueError(f"incomplete profile document (missing {missing or ['geometry']})")
    size, assoc, ls = (int(v) for v in header["geometry"])
    return CoreProfile(
        l1_rdh=Histogram1D.from_lines(sections["l1_rdh"]),
        rst=Table2D.from_lines(sections["rst"], "rst"),
        hit_rdh=Table2D.from_lines(sections["hit_rdh"], "hit"),
        l2_aad=AddressHistogram.from_lines(sections["l2_aad"]),
        l1_aad=AddressHistogram.from_lines(sections["l1_aad"]),
        l1_waad=AddressHistogram.from_lines(sections["l1_waad"]),
        l1_access_total=int(header["l1_access_total"][0]),
        l2_access_total=int(header["l2_access_total"][0]),
        geometry=CacheGeometry(size, assoc, ls),
        core=int(header.get("core", ["0"])[0]),
    )


def write_profile(p: CoreProfile, path) -> None:
    Path(path).write_text(format_profile(p))


def read_profile(path) -> CoreProfile:
    return parse_profile(Path(path).read_text())
