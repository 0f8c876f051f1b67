"""Count containers shared by every stage of the pipeline.

``Histogram1D`` holds reuse-distance style histograms (RDH, MissRDH, L2RDH,
MRDH); ``Table2D`` holds the reuse-distance x stack-distance (RST) and
reuse-distance x hit-count (Hit-RDH) tables; ``AddressHistogram`` holds
per-line access counts.  Counts start out integral and become real-valued
once the analytical models touch them.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

DEFAULT_CAP = 1024


def fmt_count(x: float) -> str:
    """Integers print bare, everything else with six decimals."""
    xf = float(x)
    if xf.is_integer() and abs(xf) < 2**53:
        return str(int(xf))
    return f"{xf:.6f}"


def parse_count(text: str) -> float | int:
    return float(text) if ("." in text or "e" in text.lower()) else int(text)


@dataclass
class Histogram1D:
    """Counts per distance ``0..cap`` plus a bucket for cold (infinite distance) references."""

    bins: np.ndarray
    cold: float = 0

    @classmethod
    def zeros(cls, cap: int = DEFAULT_CAP, dtype=np.int64) -> "Histogram1D":
        return cls(np.zeros(cap + 1, dtype=dtype), 0)

    @classmethod
    def from_distances(cls, distances: Iterable[int | None], cap: int = DEFAULT_CAP) -> "Histogram1D":
        h = cls.zeros(cap)
        for d in distances:
            h.add(d)
        return h

    @property
    def cap(self) -> int:
        return len(self.bins) - 1

    def add(self, distance: int | None, count=1) -> None:
        if distance is None:
            self.cold += count
        else:
            self.bins[min(distance, self.cap)] += count

    @property
    def finite_total(self) -> float:
        return float(self.bins.sum())

    @property
    def total(self) -> float:
        return self.finite_total + float(self.cold)

    def as_float(self) -> "Histogram1D":
        return Histogram1D(self.bins.astype(np.float64), float(self.cold))

    def copy(self) -> "Histogram1D":
        return Histogram1D(self.bins.copy(), self.cold)

    def __eq__(self, other):
        if not isinstance(other, Histogram1D):
            return NotImplemented
        return self.cold == other.cold and np.array_equal(self.bins, other.bins)

    def to_lines(self) -> list[str]:
        out = [f"cap {self.cap}", f"cold {fmt_count(self.cold)}"]
        for d in np.flatnonzero(self.bins):
            out.append(f"{d} {fmt_count(self.bins[d])}")
        return out

    @classmethod
    def from_lines(cls, lines: list[str]) -> "Histogram1D":
        cap = int(lines[0].split()[1])
        cold = parse_count(lines[1].split()[1])
        pairs = [ln.split() for ln in lines[2:]]
        vals = [parse_count(v) for _, v in pairs]
        real = isinstance(cold, float) or any(isinstance(v, float) for v in vals)
        h = cls.zeros(cap, dtype=np.float64 if real else np.int64)
        h.cold = cold
        for (d, _), v in zip(pairs, vals):
            h.bins[int(d)] = v
        return h


@dataclass
class Table2D:
    """Counts indexed by ``[reuse distance][second index]``.

    ``kind`` is ``"rst"`` (second index = stack distance) or ``"hit"``
    (second index = number of intervening L1 hits).
    """

    cells: np.ndarray
    kind: str = "rst"

    @classmethod
    def zeros(cls, cap: int = DEFAULT_CAP, kind: str = "rst", dtype=np.int64) -> "Table2D":
        return cls(np.zeros((cap + 1, cap + 1), dtype=dtype), kind)

    @property
    def cap(self) -> int:
        return self.cells.shape[0] - 1

    def row_totals(self) -> np.ndarray:
        return self.cells.sum(axis=1)

    def __eq__(self, other):
        if not isinstance(other, Table2D):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.cells, other.cells)

    def to_lines(self) -> list[str]:
        out = [f"cap {self.cap}"]
        for r, s in zip(*np.nonzero(self.cells)):
            out.append(f"{r} {s} {fmt_count(self.cells[r, s])}")
        return out

    @classmethod
    def from_lines(cls, lines: list[str], kind: str) -> "Table2D":
        cap = int(lines[0].split()[1])
        t = cls.zeros(cap, kind)
        for ln in lines[1:]:
            r, s, c = ln.split()
            t.cells[int(r), int(s)] = int(c)
        return t


@dataclass
class AddressHistogram:
    """Access counts per line-aligned byte address."""

    entries: dict[int, float] = field(default_factory=lambda: defaultdict(int))

    def add(self, addr: int, count=1) -> None:
        self.entries[addr] += count

    @property
    def total(self) -> float:
        return sum(self.entries.values())

    def __getitem__(self, addr: int) -> float:
        return self.entries.get(addr, 0)

    def __contains__(self, addr: int) -> bool:
        return self.entries.get(addr, 0) > 0

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other):
        if not isinstance(other, AddressHistogram):
            return NotImplemented
        return dict(self.entries) == dict(other.entries)

    def copy(self) -> "AddressHistogram":
        h = AddressHistogram()
        h.entries.update(self.entries)
        return h

    @staticmethod
    def sum(hists: Iterable["AddressHistogram"]) -> "AddressHistogram":
        """Element-wise sum, used to fold several cores into one virtual core."""
        out = AddressHistogram()
        for h in hists:
            for a, c in h.entries.items():
                out.entries[a] += c
        return out

    def set_totals(self, line_size: int, set_count: int) -> dict[int, float]:
        """Total count per cache set index."""
        totals: dict[int, float] = defaultdict(int)
        for a, c in self.entries.items():
            totals[(a // line_size) % set_count] += c
        return totals

    def to_lines(self) -> list[str]:
        return [f"{a:#x} {fmt_count(self.entries[a])}" for a in sorted(self.entries)]

    @classmethod
    def from_lines(cls, lines: list[str]) -> "AddressHistogram":
        h = cls()
        for ln in lines:
            a, c = ln.split()
            h.entries[int(a, 16)] = parse_count(c)
        return h
