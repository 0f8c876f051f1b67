import numpy as np
import pytest

from mrdh.geometry import CacheGeometry
from mrdh.trace import SyntheticSpec, Trace, generate

# pass/fail lines from the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def small_l1():
    return CacheGeometry(256, 2, 64)  # 2 sets, 2 ways


@pytest.fixture
def shared_trace():
    return generate(SyntheticSpec(core_count=2, records_per_core=3000, private_footprint=64,
                                  shared_footprint=32, sharing_fraction=0.5,
                                  write_fraction=0.3, seed=11))


def make_trace(core_count, refs, line_size=64):
    """``refs`` is a list of ``(core, "R"|"W", line)``."""
    cores = np.array([r[0] for r in refs], dtype=np.int64)
    writes = np.array([r[1] == "W" for r in refs], dtype=bool)
    addr = np.array([r[2] * line_size for r in refs], dtype=np.uint64)
    return Trace(core_count, cores, writes, addr)
