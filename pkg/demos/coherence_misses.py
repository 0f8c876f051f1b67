"""
Coherence misses in private caches
==================================

A line written by another core is invalidated in this core's L1.  If it is
still resident when this core comes back to it, the access misses even
though the reuse distance alone predicts a hit.
"""

from mrdh.coherence import CoherenceInputs, coherence_all, results_csv
from mrdh.geometry import CacheGeometry
from mrdh.oracle import SimConfig, simulate
from mrdh.profiler import profile_trace
from mrdh.trace import Trace, SyntheticSpec, generate

l1 = CacheGeometry(1024, 2)
l2 = CacheGeometry(8 * 1024, 8)

# The smallest case: core 0 reads A, core 1 writes A, core 0 reads A again.
tiny = Trace(2, [0, 1, 0], [False, True, False], [0x1000, 0x1000, 0x1000])
stats = simulate(tiny, SimConfig(l1, l2))
print("core 0 coherence misses (simulated):", stats.cores[0].coherence_misses)
coh = coherence_all(CoherenceInputs(profile_trace(tiny, l1), l1))
print(f"core 0 coherence misses (model):     {coh[0].miss_coherence:.3f}")

# A write-heavy workload with a small shared set.  The baseline counts
# only capacity, conflict and cold misses; the refined count adds the
# expected coherence misses.
trace = generate(SyntheticSpec(core_count=2, records_per_core=20_000, private_footprint=256,
                               shared_footprint=64, sharing_fraction=0.8,
                               write_fraction=0.5, seed=0))
l1 = CacheGeometry(2 * 1024, 2)
stats = simulate(trace, SimConfig(l1, CacheGeometry(64 * 1024, 8)))
observed = [c.l1_misses for c in stats.cores]
results = coherence_all(CoherenceInputs(profile_trace(trace, l1), l1))
print(results_csv(results, observed))
for r, obs in zip(results, observed):
    print(f"core {r.core}: baseline off by {(r.baseline_misses - obs) / obs:+.1%}, "
          f"refined off by {(r.refined_l1_misses - obs) / obs:+.1%}")
