"""How much search does the last Inception-V3 block need?

Pruning caps operators per group (r) and groups per stage (s). Fewer
candidate endings means fewer DP transitions; past a point the schedule
stops improving.

    python3 demos/03_pruning.py
"""
import time

from iosched import (AnalyticRoofline, PruningStrategy, dp_schedule, get_profile, greedy_schedule,
                     sequential_schedule, simulate)
from iosched import generators as gen

g = gen.inception_block()
m = AnalyticRoofline(get_profile("compute_bound"))
print(f"inception block: {len(g.operators)} operators")
print(f"sequential {simulate(g, sequential_schedule(g, 0), m) * 1e3:.4f} ms, "
      f"greedy {simulate(g, greedy_schedule(g, 0), m) * 1e3:.4f} ms\n")

print(f"{'r':>3} {'s':>3} {'transitions':>12} {'states':>7} {'latency':>11} {'search':>9}")
for r, s in [(1, 1), (1, 8), (2, 2), (2, 8), (3, 8), (None, None)]:
    p = PruningStrategy(r, s) if r else None
    start = time.perf_counter()
    q, memo = dp_schedule(g, 0, m, p)
    took = time.perf_counter() - start
    label = (str(r), str(s)) if p else ("-", "-")
    print(f"{label[0]:>3} {label[1]:>3} {memo.transitions:>12} {len(memo.cost):>7} "
          f"{q.total_latency * 1e3:>8.4f} ms {took * 1e3:>6.1f} ms")

q, _ = dp_schedule(g, 0, m)
print("\nunpruned schedule:")
for i, st in enumerate(q.stages):
    print(f"  stage {i} ({st.strategy.value}, {st.latency * 1e3:.4f} ms): "
          + "  ".join("[" + ",".join(grp) + "]" for grp in st.groups))
