"""Width controls how many states the DP can visit.

For d parallel chains of c operators the reachable states are exactly the
(c+1)^d prefix combinations, and the (state, ending) pairs, counting the
empty ending, reach C(c+2, 2)^d. General graphs stay under the bound
computed from their width.

    python3 demos/04_width_and_bound.py
"""
import random

from iosched import bound_check, format_sig, graph_width
from iosched import generators as gen

print(f"{'graph':<16} {'n':>3} {'width':>5} {'states':>7} {'transitions':>11} {'pairs':>7} {'bound':>8}")


def row(label, g):
    r = bound_check(g, 0)
    print(f"{label:<16} {r.n:>3} {r.width:>5} {r.states:>7} {r.transitions:>11} {r.pairs:>7} "
          f"{format_sig(r.bound):>8}")


for c, d in [(1, 3), (2, 2), (3, 2), (2, 3), (4, 2)]:
    row(f"chains c={c} d={d}", gen.chains(c, d))
row("fig5", gen.fig5())
row("inception", gen.inception_block())
rng = random.Random(1)
for seed in range(4):
    row(f"random seed {seed}", gen.random_dag(rng.randint(6, 11), 0.3, seed))

g = gen.inception_block()
cert = graph_width(g, 0)
view = g.view(0)
print(f"\ninception width {cert.width}: antichain {sorted(view.set_of(cert.antichain))}")
print("chain cover:", "  ".join("->".join(c) for c in cert.chains))
