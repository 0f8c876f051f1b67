"""Memory reference traces: data model, text format and a synthetic generator.

Text format::

    # comment
    cores 2 line 64
    0 R 0x1000
    1 W 0x2040

Line order defines the global interleave (``seq``).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

READ, WRITE = "R", "W"


class TraceError(ValueError):
    pass


class ParseError(TraceError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class EmptyTrace(TraceError):
    pass


class InvalidSpec(TraceError):
    pass


class ReferenceRecord(NamedTuple):
    core: int
    op: str
    addr: int
    seq: int

    @property
    def is_write(self) -> bool:
        return self.op == WRITE


class Trace:
    """An ordered, merged multi-core reference stream.

    Records are stored column-wise in numpy arrays; iterate to get
    :class:`ReferenceRecord` tuples.
    """

    def __init__(self, core_count: int, core, is_write, addr, seq=None,
                 line_size_hint: int | None = None):
        self.core_count = int(core_count)
        self.core = np.asarray(core, dtype=np.int64)
        self.is_write = np.asarray(is_write, dtype=bool)
        self.addr = np.asarray(addr, dtype=np.uint64)
        n = len(self.core)
        self.seq = np.arange(n, dtype=np.int64) if seq is None else np.asarray(seq, dtype=np.int64)
        self.line_size_hint = line_size_hint
        if not (len(self.is_write) == len(self.addr) == len(self.seq) == n):
            raise TraceError("column lengths differ")
        if self.core_count < 1:
            raise TraceError("core_count must be >= 1")
        if n:
            if self.core.min() < 0 or self.core.max() >= self.core_count:
                raise TraceError("core index out of range")
            if np.any(np.diff(self.seq) <= 0):
                order = np.argsort(self.seq, kind="stable")
                self.core, self.is_write = self.core[order], self.is_write[order]
                self.addr, self.seq = self.addr[order], self.seq[order]
                if np.any(np.diff(self.seq) == 0):
                    raise TraceError("duplicate seq values")

    @classmethod
    def from_records(cls, core_count: int, records, line_size_hint=None) -> "Trace":
        records = list(records)
        return cls(core_count,
                   [r.core for r in records],
                   [r.op == WRITE for r in records],
                   [r.addr for r in records],
                   [r.seq for r in records],
                   line_size_hint)

    def __len__(self) -> int:
        return len(self.core)

    def __iter__(self) -> Iterator[ReferenceRecord]:
        for c, w, a, s in zip(self.core.tolist(), self.is_write.tolist(),
                              self.addr.tolist(), self.seq.tolist()):
            yield ReferenceRecord(c, WRITE if w else READ, a, s)

    @property
    def records(self) -> list[ReferenceRecord]:
        return list(self)

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (self.core_count == other.core_count
                and self.line_size_hint == other.line_size_hint
                and np.array_equal(self.core, other.core)
                and np.array_equal(self.is_write, other.is_write)
                and np.array_equal(self.addr, other.addr)
                and np.array_equal(self.seq, other.seq))

    def __repr__(self):
        return f"Trace(core_count={self.core_count}, records={len(self)})"

    def select(self, mask) -> "Trace":
        return Trace(self.core_count, self.core[mask], self.is_write[mask],
                     self.addr[mask], self.seq[mask], self.line_size_hint)


def split_by_core(trace: Trace) -> list[Trace]:
    """Per-core subsequences, in seq order, one per declared core."""
    return [trace.select(trace.core == c) for c in range(trace.core_count)]


def write_trace(trace: Trace, path) -> None:
    Path(path).write_text(format_trace(trace))


def format_trace(trace: Trace) -> str:
    head = f"cores {trace.core_count}"
    if trace.line_size_hint:
        head += f" line {trace.line_size_hint}"
    body = [f"{r.core} {r.op} {r.addr:#x}" for r in trace]
    return "\n".join([head, *body]) + "\n"


def read_trace(path) -> Trace:
    return parse_trace(Path(path).read_text())


def parse_trace(text: str) -> Trace:
    core_count = None
    line_hint = None
    cores, writes, addrs = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if core_count is None:
            if parts[0] != "cores" or len(parts) not in (2, 4):
                raise ParseError(lineno, "expected header 'cores <N> [line <bytes>]'")
            try:
                core_count = int(parts[1])
                if len(parts) == 4:
                    if parts[2] != "line":
                        raise ValueError
                    line_hint = int(parts[3])
            except ValueError:
                raise ParseError(lineno, "malformed header") from None
            if core_count < 1:
                raise ParseError(lineno, "core count must be >= 1")
            if line_hint is not None and (line_hint <= 0 or line_hint & (line_hint - 1)):
                raise ParseError(lineno, "line size must be a power of two")
            continue
        if len(parts) != 3:
            raise ParseError(lineno, "expected '<core> <R|W> <hex-address>'")
        c, op, a = parts
        try:
            core = int(c)
        except ValueError:
            raise ParseError(lineno, f"bad core id {c!r}") from None
        if not 0 <= core < core_count:
            raise ParseError(lineno, f"core {core} outside 0..{core_count - 1}")
        if op not in (READ, WRITE):
            raise ParseError(lineno, f"bad op {op!r}")
        try:
            addr = int(a, 16)
        except ValueError:
            raise ParseError(lineno, f"bad address {a!r}") from None
        if addr < 0:
            raise ParseError(lineno, "negative address")
        cores.append(core)
        writes.append(op == WRITE)
        addrs.append(addr)
    if core_count is None:
        raise EmptyTrace("no header found")
    if not cores:
        raise EmptyTrace("trace has no records")
    return Trace(core_count, cores, writes, addrs, line_size_hint=line_hint)


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a synthetic multi-core workload.

    ``interleave`` is ``"round_robin"`` or ``"random"``; ``pattern`` is
    ``"random"`` (uniform over the footprint) or ``"loop"`` (sequential sweep).
    Private footprints are disjoint per core; the shared footprint is visible
    to every core.
    """

    core_count: int = 2
    records_per_core: int = 10_000
    private_footprint: int = 256
    shared_footprint: int = 0
    sharing_fraction: float = 0.0
    write_fraction: float = 0.0
    interleave: str = "random"
    pattern: str = "random"
    seed: int = 0
    line_size: int = 64

    def validate(self) -> None:
        if self.core_count < 1 or self.records_per_core < 0:
            raise InvalidSpec("core_count >= 1 and records_per_core >= 0 required")
        for name in ("sharing_fraction", "write_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidSpec(f"{name}={v} outside [0, 1]")
        if self.private_footprint < 0 or self.shared_footprint < 0:
            raise InvalidSpec("footprints must be >= 0")
        if self.sharing_fraction > 0 and self.shared_footprint == 0:
            raise InvalidSpec("sharing_fraction > 0 needs a shared footprint")
        if self.sharing_fraction < 1 and self.private_footprint == 0 and self.records_per_core:
            raise InvalidSpec("private accesses need a private footprint")
        if self.interleave not in ("round_robin", "random"):
            raise InvalidSpec(f"unknown interleave {self.interleave!r}")
        if self.pattern not in ("random", "loop"):
            raise InvalidSpec(f"unknown access pattern {self.pattern!r}")
        if self.line_size <= 0 or self.line_size & (self.line_size - 1):
            raise InvalidSpec("line_size must be a power of two")

    def shared_base(self) -> int:
        """Byte address where the shared footprint starts."""
        return self.core_count * self.private_footprint * self.line_size


def generate(spec: SyntheticSpec) -> Trace:
    """Build a deterministic synthetic trace from ``spec``."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n, ls = spec.records_per_core, spec.line_size
    per_core = []
    for c in range(spec.core_count):
        shared = rng.random(n) < spec.sharing_fraction
        writes = rng.random(n) < spec.write_fraction
        lines = np.empty(n, dtype=np.int64)
        n_sh = int(shared.sum())
        n_pr = n - n_sh
        if spec.pattern == "random":
            lines[shared] = rng.integers(0, max(spec.shared_footprint, 1), n_sh)
            lines[~shared] = rng.integers(0, max(spec.private_footprint, 1), n_pr)
        else:
            lines[shared] = np.arange(n_sh) % max(spec.shared_footprint, 1)
            lines[~shared] = np.arange(n_pr) % max(spec.private_footprint, 1)
        base = np.where(shared, spec.shared_base(), c * spec.private_footprint * ls)
        # word offset inside the line so alignment is exercised downstream
        offset = rng.integers(0, max(ls // 8, 1), n) * 8 % ls
        per_core.append((writes, base + lines * ls + offset))

    total = n * spec.core_count
    if spec.interleave == "round_robin":
        order = np.tile(np.arange(spec.core_count), n)
    else:
        order = np.repeat(np.arange(spec.core_count), n)
        rng.shuffle(order)
    core = order
    is_write = np.empty(total, dtype=bool)
    addr = np.empty(total, dtype=np.int64)
    for c, (w, a) in enumerate(per_core):
        pos = np.flatnonzero(order == c)
        is_write[pos] = w
        addr[pos] = a
    return Trace(spec.core_count, core, is_write, addr, line_size_hint=ls)
