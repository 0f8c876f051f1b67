"""Cache geometry: size, associativity, line size and the derived set mapping."""

from __future__ import annotations

from dataclasses import dataclass


class GeometryError(ValueError):
    """Raised for a cache geometry that cannot be built."""


def _is_pow2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class CacheGeometry:
    size: int
    associativity: int
    line_size: int = 64

    def __post_init__(self):
        if self.line_size <= 0 or not _is_pow2(self.line_size):
            raise GeometryError(f"line size {self.line_size} is not a power of two")
        if self.associativity < 1:
            raise GeometryError(f"associativity {self.associativity} must be >= 1")
        way_bytes = self.associativity * self.line_size
        if self.size <= 0 or self.size % way_bytes:
            raise GeometryError(
                f"size {self.size} not divisible by associativity x line size ({way_bytes})")
        if not _is_pow2(self.size // way_bytes):
            raise GeometryError(f"set count {self.size // way_bytes} is not a power of two")

    @property
    def set_count(self) -> int:
        return self.size // (self.associativity * self.line_size)

    @property
    def lines(self) -> int:
        return self.size // self.line_size

    def line_of(self, addr: int) -> int:
        return addr // self.line_size

    def set_of_line(self, line: int) -> int:
        return line % self.set_count

    def set_of(self, addr: int) -> int:
        return (addr // self.line_size) % self.set_count

    def label(self) -> str:
        return size_label(self.size)


def size_label(nbytes: int) -> str:
    """Compact size text as used in config labels: ``16k``, ``4M``."""
    if nbytes % (1 << 20) == 0:
        return f"{nbytes >> 20}M"
    if nbytes % (1 << 10) == 0:
        return f"{nbytes >> 10}k"
    return str(nbytes)


def parse_size(text: str) -> int:
    """Inverse of :func:`size_label`; also accepts plain byte counts and ``KB``/``MB``."""
    t = text.strip().upper().removesuffix("B")
    mult = 1
    if t.endswith("K"):
        mult, t = 1 << 10, t[:-1]
    elif t.endswith("M"):
        mult, t = 1 << 20, t[:-1]
    try:
        return int(t) * mult
    except ValueError:
        raise GeometryError(f"bad size {text!r}") from None
