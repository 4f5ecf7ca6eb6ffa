"""Reference schedules, an exhaustive oracle, and exact state-graph counts."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .costs import CostModel
from .errors import TooLargeError
from .graph import Block, ComputationGraph, groups_of
from .merging import build_merge, can_merge
from .scheduler import (PruningStrategy, Schedule, Stage, StageMode, Strategy, enumerate_endings,
                        evaluate)

BRUTE_FORCE_MAX_OPS = 14


def _as_block(g, block) -> Block:
    return g.blocks[block] if isinstance(block, int) else block


def _maybe_eval(g, sched, m):
    return evaluate(g, sched, m) if m is not None else sched


def sequential_schedule(g: ComputationGraph, block: Block | int, m: CostModel | None = None) -> Schedule:
    """One operator per stage in topological order (ties by id)."""
    block = _as_block(g, block)
    view = g.view(block)
    stages = tuple(Stage(Strategy.CONCURRENT, ((view.ids[i],),)) for i in view.topo)
    return _maybe_eval(g, Schedule(block.index, stages), m)


def greedy_schedule(g: ComputationGraph, block: Block | int, m: CostModel | None = None) -> Schedule:
    """Every stage runs all operators whose in-block predecessors are done."""
    block = _as_block(g, block)
    view = g.view(block)
    done = 0
    stages = []
    while done != view.full:
        ready = 0
        for i in range(view.n):
            if not done >> i & 1 and view.pred[i] & ~done == 0:
                ready |= 1 << i
        groups = tuple(tuple(view.ids_of(c)) for c in groups_of(view, ready))
        stages.append(Stage(Strategy.CONCURRENT, groups))
        done |= ready
    return _maybe_eval(g, Schedule(block.index, tuple(stages)), m)


# ---------------------------------------------------------------- exhaustive oracle

class _Brute:
    """Plain subset enumeration, sharing nothing with the DP but the cost model."""

    def __init__(self, g: ComputationGraph, block: Block, m: CostModel, mode: StageMode):
        self.g, self.m, self.mode = g, m, mode
        self.ids = sorted(block.op_ids)
        idx = {k: i for i, k in enumerate(self.ids)}
        n = len(self.ids)
        self.succ = [0] * n
        self.nbr = [0] * n
        for u, v in g.edges:
            if u in idx and v in idx:
                self.succ[idx[u]] |= 1 << idx[v]
                self.nbr[idx[u]] |= 1 << idx[v]
                self.nbr[idx[v]] |= 1 << idx[u]
        self.order = self._topo()
        self._endings: dict[int, list[int]] = {}
        self._variants: dict[int, list[tuple]] = {}

    def _topo(self):
        n = len(self.ids)
        placed, order = 0, []
        while len(order) < n:
            for i in range(n):
                if not placed >> i & 1 and all(not (self.succ[j] >> i & 1) or placed >> j & 1
                                               for j in range(n)):
                    order.append(i)
                    placed |= 1 << i
                    break
        return order

    def endings(self, s: int) -> list[int]:
        got = self._endings.get(s)
        if got is None:
            got = []
            sub = s
            while sub:
                rest = s & ~sub
                if all(not (sub >> i & 1) or not (self.succ[i] & rest) for i in range(len(self.ids))):
                    got.append(sub)
                sub = (sub - 1) & s
            self._endings[s] = got
        return got

    def components(self, e: int) -> list[list[str]]:
        comps, seen = [], 0
        for i in self.order:
            if e >> i & 1 and not seen >> i & 1:
                comp, stack = 1 << i, [i]
                while stack:
                    j = stack.pop()
                    for k in range(len(self.ids)):
                        if self.nbr[j] >> k & 1 and e >> k & 1 and not comp >> k & 1:
                            comp |= 1 << k
                            stack.append(k)
                seen |= comp
                comps.append((comp & -comp, [self.ids[k] for k in self.order if comp >> k & 1]))
        return [c for _, c in sorted(comps)]

    def variants(self, e: int) -> list[tuple]:
        """All (latency, strategy rank, stage) ways of running ``e`` as one stage."""
        got = self._variants.get(e)
        if got is None:
            got = []
            comps = self.components(e)
            single = len(comps) == 1 and len(comps[0]) == 1
            if self.mode is not StageMode.MERGE or single:
                lat = self.m.concurrent_stage_latency([[self.g.operators[i] for i in c] for c in comps])
                got.append((lat, 0, Stage(Strategy.CONCURRENT, tuple(tuple(c) for c in comps), lat)))
            members = [self.ids[i] for i in range(len(self.ids)) if e >> i & 1]
            if self.mode is not StageMode.PARALLEL and len(members) > 1 and can_merge(self.g, members):
                plan = build_merge(self.g, members)
                lat = self.m.merged_stage_latency(plan.merged, plan.split)
                got.append((lat, 1, Stage(Strategy.MERGE, (plan.members,), lat, plan)))
            self._variants[e] = got
        return got

    def search(self):
        full = (1 << len(self.ids)) - 1
        best_total = math.inf
        best_key = None
        best_path = None
        path: list[tuple[int, tuple]] = []  # last stage first

        def leaf():
            nonlocal best_total, best_key, best_path
            total = 0.0
            for e, var in reversed(path):
                total += var[0]
            if total > best_total:
                return
            prefix = [0.0]
            for e, var in reversed(path):
                prefix.append(prefix[-1] + var[0])
            key = []
            for depth, (e, var) in enumerate(path):
                key += [prefix[len(path) - depth], -bin(e).count("1"), e, var[0], var[1]]
            key = tuple(key)
            if best_key is None or key < best_key:
                best_total, best_key, best_path = total, key, list(path)

        def dfs(s):
            if not s:
                leaf()
                return
            for e in self.endings(s):
                for var in self.variants(e):
                    path.append((e, var))
                    dfs(s & ~e)
                    path.pop()

        dfs(full)
        return best_path, best_total


def brute_force_optimal(g: ComputationGraph, block: Block | int, m: CostModel,
                        mode: StageMode = StageMode.BOTH) -> tuple[Schedule, float]:
    """Enumerate every feasible schedule and return a cheapest one.

    Ties are broken like the DP: compare total latency, then the last stage
    (larger first, then smaller bitmask, then cheaper / concurrent first),
    then the latency of the remaining prefix, and so on backwards.
    """
    block = _as_block(g, block)
    if len(block.op_ids) > BRUTE_FORCE_MAX_OPS:
        raise TooLargeError(f"brute force is limited to {BRUTE_FORCE_MAX_OPS} operators, "
                            f"block {block.index} has {len(block.op_ids)}")
    if not block.op_ids:
        return Schedule(block.index, ()), 0.0
    path, total = _Brute(g, block, m, mode).search()
    stages = tuple(var[2] for _, var in reversed(path))
    return Schedule(block.index, stages), total


# ---------------------------------------------------------------- counting

@dataclass(frozen=True)
class CountReport:
    n: int
    states: int       # reachable S, including the empty set
    transitions: int  # (S, S') pairs with S' a non-empty admissible ending of S
    schedules: int    # root-to-empty paths, i.e. distinct stage partitions


def count_all(g: ComputationGraph, block: Block | int, p: PruningStrategy | None = None) -> CountReport:
    block = _as_block(g, block)
    view = g.view(block)
    edges: dict[int, list[int]] = {}

    stack = [view.full]
    while stack:
        s = stack.pop()
        if s in edges:
            continue
        nxt = [s & ~e for e, _ in enumerate_endings(view, s, p)] if s else []
        edges[s] = nxt
        stack.extend(t for t in nxt if t not in edges)

    @lru_cache(maxsize=None)
    def paths(s: int) -> int:
        if not s:
            return 1
        return sum(paths(t) for t in edges[s])

    # walk bottom-up by popcount so the cache never recurses deeply
    for s in sorted(edges, key=lambda x: bin(x).count("1")):
        paths(s)
    return CountReport(view.n, len(edges), sum(len(v) for v in edges.values()), paths(view.full))
