"""Width of a block DAG and the transition-count bound it implies.

Width is the largest antichain of the reachability order. By Dilworth's
theorem it equals the fewest chains covering the block, computed here as
``n - |maximum matching|`` on the bipartite graph of the transitive closure.
A maximum antichain is read off the matching's König vertex cover.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .baselines import count_all
from .graph import Block, BlockView, ComputationGraph, OpSet, iter_bits


@dataclass(frozen=True)
class WidthCertificate:
    width: int
    antichain: OpSet
    chains: tuple[tuple[str, ...], ...]


def reachability(view: BlockView) -> list[OpSet]:
    """``reach[i]``: every operator reachable from ``i`` by a non-empty path."""
    reach = [0] * view.n
    for i in reversed(view.topo):
        r = view.succ[i]
        for j in iter_bits(view.succ[i]):
            r |= reach[j]
        reach[i] = r
    return reach


def graph_width(g: ComputationGraph, block: Block | int) -> WidthCertificate:
    view = g.view(block)
    n = view.n
    if n == 0:
        return WidthCertificate(0, 0, ())
    reach = reachability(view)
    dense = np.zeros((n, n), dtype=np.int8)
    for i in range(n):
        for j in iter_bits(reach[i]):
            dense[i, j] = 1
    # match[i] = j pairs i with the next element j of its chain
    match = maximum_bipartite_matching(csr_matrix(dense), perm_type="column")
    match_of_right = [-1] * n
    for i, j in enumerate(match):
        if j >= 0:
            match_of_right[j] = i

    chains = []
    for i in view.topo:
        if match_of_right[i] < 0:
            chain, k = [], i
            while k >= 0:
                chain.append(view.ids[k])
                k = int(match[k])
            chains.append(tuple(chain))

    # König: alternate from unmatched left vertices (free edges L->R, matched edges R->L)
    z_left, z_right = 0, 0
    frontier = [i for i in range(n) if match[i] < 0]
    for i in frontier:
        z_left |= 1 << i
    while frontier:
        nxt = []
        for i in frontier:
            for j in iter_bits(reach[i] & ~z_right):
                z_right |= 1 << j
                k = match_of_right[j]
                if k >= 0 and not z_left >> k & 1:
                    z_left |= 1 << k
                    nxt.append(k)
        frontier = nxt
    antichain = z_left & ~z_right
    return WidthCertificate(len(chains), antichain, tuple(chains))


def max_antichain_brute(g: ComputationGraph, block: Block | int) -> int:
    """Largest path-free subset by trying subsets from the largest size down."""
    view = g.view(block)
    reach = reachability(view)
    for size in range(view.n, 0, -1):
        for combo in combinations(range(view.n), size):
            if all(not (reach[a] >> b & 1) and not (reach[b] >> a & 1)
                   for a, b in combinations(combo, 2)):
                return size
    return 0


def complexity_bound(n: int, d: int) -> Fraction:
    """``C(n/d + 2, 2) ** d`` with ``n/d`` kept as an exact rational."""
    if n < 1 or not 1 <= d <= n:
        raise ValueError(f"need n >= 1 and 1 <= d <= n, got n={n}, d={d}")
    q = Fraction(n, d)
    return ((q + 2) * (q + 1) / 2) ** d


def format_sig(x, digits: int = 2) -> str:
    """Scientific notation without padding: ``25650 -> '2.6e4'``."""
    x = Fraction(x)
    with localcontext() as ctx:
        ctx.prec = 60
        dec = Decimal(x.numerator) / Decimal(x.denominator)
        text = f"{dec:.{digits - 1}e}"
    mant, exp = text.split("e")
    return f"{mant}e{int(exp)}"


@dataclass(frozen=True)
class BoundReport:
    n: int
    width: int
    transitions: int
    states: int
    schedules: int
    bound: Fraction

    @property
    def pairs(self) -> int:
        """(S, S') pairs counting the empty ending once per state."""
        return self.transitions + self.states

    @property
    def ratio(self) -> float:
        return float(self.transitions / self.bound)

    def as_dict(self) -> dict:
        return {"n": self.n, "width": self.width, "transitions": self.transitions,
                "bound": format_sig(self.bound), "schedules": str(self.schedules),
                "states": self.states, "pairs": self.pairs, "ratio": round(self.ratio, 6)}


def bound_check(g: ComputationGraph, block: Block | int) -> BoundReport:
    """Count the unpruned state graph and check it against the width bound."""
    counts = count_all(g, block)
    if counts.n == 0:
        return BoundReport(0, 0, 0, counts.states, counts.schedules, Fraction(1))
    width = graph_width(g, block).width
    bound = complexity_bound(counts.n, width)
    report = BoundReport(counts.n, width, counts.transitions, counts.states, counts.schedules, bound)
    assert report.pairs <= bound, f"transition bound violated: {report}"
    return report
