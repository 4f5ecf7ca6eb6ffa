"""Walk the scheduler through the smallest interesting graph.

a feeds b, c is independent. With a = 1 ms, b = 2 ms, c = 3 ms and a device
where concurrent groups cost only their slowest member, the best plan runs
everything as one stage: [a -> b] alongside [c], 3 ms in total.

    python3 demos/01_three_operators.py
"""
from iosched import (AnalyticRoofline, LatencyTable, TableCostModel, count_all, dp_schedule,
                     enumerate_endings, get_profile, greedy_schedule, sequential_schedule, simulate)
from iosched import generators as gen

g = gen.fig5()
view = g.view(0)
m = TableCostModel(LatencyTable({"a": 1e-3, "b": 2e-3, "c": 3e-3}),
                   AnalyticRoofline(get_profile("pure_max")))

print("Candidate last stages of {a, b, c}:")
for e, groups in enumerate_endings(view, view.full):
    parts = " + ".join("[" + " -> ".join(view.ids_of(c)) + "]" for c in groups)
    print(f"  {sorted(view.set_of(e))!s:<18} groups {parts}")

counts = count_all(g, 0)
print(f"\nState graph: {counts.states} states (empty set included), "
      f"{counts.transitions} transitions, {counts.schedules} complete schedules")

q, memo = dp_schedule(g, 0, m)
print("\nMemoized cost of every remaining set:")
for s in sorted(memo.cost, key=lambda s: (bin(s).count("1"), s)):
    print(f"  {sorted(view.set_of(s))!s:<18} {memo.cost[s] * 1e3:.1f} ms")

print("\nChosen schedule:")
for i, st in enumerate(q.stages):
    print(f"  stage {i}: {st.strategy.value}, groups {st.groups}, {st.latency * 1e3:.1f} ms")

for name, sched in (("sequential", sequential_schedule(g, 0)), ("greedy", greedy_schedule(g, 0)), ("IOS", q)):
    print(f"{name:>10}: {simulate(g, sched, m) * 1e3:.1f} ms")
