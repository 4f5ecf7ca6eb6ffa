"""Same graph, different device, different schedule.

A 3x1 and a 1x3 convolution read one large activation. Merging them pads both
kernels to 3x3 (three times the flops), but reads the shared input once and
launches one kernel. On a compute-bound device the padding is too expensive
and the pair runs concurrently; when memory traffic and contention dominate,
the merge wins.

    python3 demos/02_specialization.py
"""
from iosched import AnalyticRoofline, build_merge, dp_schedule, get_profile, op_latency
from iosched import generators as gen

g = gen.kernel_pair()
plan = build_merge(g, ["f", "g"])
f, gg = g.operators["f"], g.operators["g"]
print(f"f {f.kernel} + g {gg.kernel} -> merged {plan.merged.kernel}, "
      f"{plan.merged.out_channels} channels, offsets {plan.channel_offsets}")
print(f"flops {f.flops + gg.flops:.3g} -> {plan.merged.flops:.3g}; "
      f"bytes read {f.bytes_read + gg.bytes_read:.3g} -> {plan.merged.bytes_read:.3g}\n")

for name in ("compute_bound", "memory_bound"):
    m = AnalyticRoofline(get_profile(name))
    conc = m.concurrent_stage_latency([[f], [gg]])
    merged = m.merged_stage_latency(plan.merged, plan.split)
    q, _ = dp_schedule(g, 0, m)
    print(f"{name}:")
    print(f"  f alone {op_latency(m, f) * 1e3:.3f} ms, g alone {op_latency(m, gg) * 1e3:.3f} ms")
    print(f"  concurrent stage {conc * 1e3:.3f} ms, merged stage {merged * 1e3:.3f} ms")
    print(f"  chosen: {q.stages[0].strategy.value}\n")
