"""
From a trace to an L2 miss rate
===============================

Generate a two-core trace, profile each core once against its private L1,
and let the model predict how the shared L2 behaves.  The reference
simulator runs alongside so the prediction can be checked.
"""

from mrdh.geometry import CacheGeometry
from mrdh.pipeline import compare
from mrdh.trace import SyntheticSpec, generate

# A small workload: each core has a private working set of 300 lines and
# the two cores share another 200 lines for half of their references.
trace = generate(SyntheticSpec(core_count=2, records_per_core=20_000,
                               private_footprint=300, shared_footprint=200,
                               sharing_fraction=0.5, write_fraction=0.2, seed=1))
print(f"{len(trace)} references from {trace.core_count} cores")

# 4 KiB 2-way private L1s in front of a 32 KiB 8-way shared L2.
l1 = CacheGeometry(4 * 1024, 2)
l2 = CacheGeometry(32 * 1024, 8)

# compare() profiles the trace, runs the model and replays the trace
# through the simulator.
result = compare(trace, l1, l2)
print(result.model.text().split("[mrdh]")[0])

# The table lists model and simulator numbers side by side.  The
# ``l2_miss_rate`` row is measured against the reuse profile of the real
# merged L2 stream; ``l2_miss_rate_simulated`` is what the LRU cache did.
print(result.table())
