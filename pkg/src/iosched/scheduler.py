"""Inter-operator scheduling by dynamic programming over block endings.

The DP state is the set ``S`` of operators still to schedule. An *ending* of
``S`` is a subset with no edge leaving it towards the rest of ``S``; it is
a candidate last stage. ``cost[S]`` is the minimum over admissible endings
``E`` of ``cost[S - E] + stage_latency(E)`` with ``cost[{}] = 0``.

Ties between endings are broken towards larger endings (fewer stages), then
towards the smaller bitmask. Ties between strategies for one stage prefer
concurrent execution.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Sequence

from .costs import CostModel
from .errors import InfeasibleError, MismatchError, SchemaError
from .graph import (Block, BlockView, ComputationGraph, OpSet, groups_of, iter_bits,
                    operator_to_dict, popcount)
from .merging import MergePlan, build_merge, can_merge


class Strategy(str, Enum):
    CONCURRENT = "concurrent"
    MERGE = "merge"


class StageMode(str, Enum):
    """Which parallelization strategies the search may use."""
    BOTH = "both"
    PARALLEL = "parallel"  # concurrent execution only
    MERGE = "merge"        # operator merge only; lone operators still run as singleton stages


@dataclass(frozen=True)
class PruningStrategy:
    r: int  # max operators per group
    s: int  # max groups per stage

    def __post_init__(self):
        if self.r < 1 or self.s < 1:
            raise ValueError(f"pruning parameters must be >= 1, got r={self.r}, s={self.s}")

    @classmethod
    def unpruned(cls, n: int = 64) -> PruningStrategy:
        return cls(max(n, 1), max(n, 1))

    def admits(self, groups: Sequence[OpSet]) -> bool:
        return len(groups) <= self.s and all(popcount(g) <= self.r for g in groups)


DEFAULT_PRUNING = PruningStrategy(3, 8)


@dataclass(frozen=True)
class Stage:
    strategy: Strategy
    groups: tuple[tuple[str, ...], ...]  # concurrent: connectivity groups in topological order
    latency: float | None = None
    merge: MergePlan | None = None

    @property
    def ops(self) -> frozenset[str]:
        return frozenset(i for g in self.groups for i in g)


@dataclass(frozen=True)
class Schedule:
    block: int
    stages: tuple[Stage, ...]

    @property
    def total_latency(self) -> float | None:
        total = 0.0
        for st in self.stages:
            if st.latency is None:
                return None
            total += st.latency
        return total


@dataclass(frozen=True)
class NetworkSchedule:
    blocks: tuple[Schedule, ...]

    @property
    def network_latency(self) -> float | None:
        total = 0.0
        for b in self.blocks:
            t = b.total_latency
            if t is None:
                return None
            total += t
        return total


@dataclass
class MemoTable:
    cost: dict[OpSet, float] = field(default_factory=dict)
    choice: dict[OpSet, tuple] = field(default_factory=dict)  # S -> (ending, strategy, payload, latency)
    misses: int = 0
    hits: int = 0
    transitions: int = 0


# ---------------------------------------------------------------- endings

def is_ending(view: BlockView, s: OpSet, e: OpSet) -> bool:
    rest = s & ~e
    return all(not (view.succ[i] & rest) for i in iter_bits(e))


def enumerate_endings(view: BlockView, s: OpSet, p: PruningStrategy | None = None
                      ) -> Iterator[tuple[OpSet, list[OpSet]]]:
    """Yield every non-empty admissible ending of ``s`` with its group partition.

    Members of ``s`` are decided in reverse topological order; an operator
    may join the ending only once all its successors inside ``s`` have.
    Components only grow as operators join, so a component exceeding ``r``
    kills the branch immediately. Output is in ascending bitmask order.
    """
    if p is None:
        p = PruningStrategy.unpruned(view.n)
    order = sorted(iter_bits(s), key=lambda i: view.rank[i], reverse=True)
    succ_in_s = [view.succ[i] & s for i in range(view.n)]
    r_max, s_max = p.r, p.s
    found: list[tuple[OpSet, list[OpSet]]] = []

    def rec(k: int, e: OpSet, comps: list[OpSet]):
        if k == len(order):
            if e and len(comps) <= s_max:
                found.append((e, sorted(comps, key=lambda c: c & -c)))
            return
        v = order[k]
        rec(k + 1, e, comps)
        if succ_in_s[v] & ~e:
            return
        touched = succ_in_s[v]
        joined = 1 << v
        kept = []
        for c in comps:
            if c & touched:
                joined |= c
            else:
                kept.append(c)
        if popcount(joined) > r_max:
            return
        kept.append(joined)
        rec(k + 1, e | (1 << v), kept)

    rec(0, 0, [])
    found.sort(key=lambda t: t[0])
    yield from found


# ---------------------------------------------------------------- stages

def generate_stage(g: ComputationGraph, view: BlockView, e: OpSet, groups: Sequence[OpSet],
                   m: CostModel, mode: StageMode = StageMode.BOTH):
    """Pick the cheaper strategy for ending ``e``.

    Returns ``(latency, strategy, payload)`` where payload is the tuple of
    id-groups for concurrent execution or a :class:`MergePlan`.
    """
    id_groups = tuple(tuple(view.ids_of(c)) for c in groups)
    if mode is StageMode.MERGE and popcount(e) > 1:
        l_conc = math.inf
    else:
        l_conc = m.concurrent_stage_latency([[g.operators[i] for i in grp] for grp in id_groups])
    plan = None
    l_merge = math.inf
    if mode is not StageMode.PARALLEL and popcount(e) > 1:
        members = view.ids_of(e)
        if can_merge(g, members):
            plan = build_merge(g, members)
            l_merge = m.merged_stage_latency(plan.merged, plan.split)
    if l_conc <= l_merge:
        return l_conc, Strategy.CONCURRENT, id_groups
    return l_merge, Strategy.MERGE, plan


def _make_stage(strategy: Strategy, payload, latency: float) -> Stage:
    if strategy is Strategy.MERGE:
        return Stage(strategy, (payload.members,), latency, payload)
    return Stage(strategy, payload, latency)


# ---------------------------------------------------------------- DP

def _as_block(g: ComputationGraph, block: Block | int) -> Block:
    return g.blocks[block] if isinstance(block, int) else block


def dp_schedule(g: ComputationGraph, block: Block | int, m: CostModel,
                p: PruningStrategy | None = None, mode: StageMode = StageMode.BOTH
                ) -> tuple[Schedule, MemoTable]:
    block = _as_block(g, block)
    view = g.view(block)
    memo = MemoTable()
    memo.cost[0] = 0.0
    stage_cache: dict[OpSet, tuple] = {}

    def stage_of(e: OpSet, groups):
        hit = stage_cache.get(e)
        if hit is None:
            hit = stage_cache[e] = generate_stage(g, view, e, groups, m, mode)
        return hit

    def scheduler(s: OpSet) -> float:
        cached = memo.cost.get(s)
        if cached is not None:
            memo.hits += 1
            return cached
        memo.misses += 1
        best = math.inf
        best_choice = None
        best_size = -1
        for e, groups in enumerate_endings(view, s, p):
            memo.transitions += 1
            latency, strategy, payload = stage_of(e, groups)
            total = scheduler(s & ~e) + latency
            size = popcount(e)
            if total < best or (total == best and size > best_size and best_choice is not None):
                best, best_size = total, size
                best_choice = (e, strategy, payload, latency)
        if best_choice is None:
            raise InfeasibleError(
                f"block {block.index}: no admissible ending for {view.ids_of(s)} under {p}")
        memo.cost[s] = best
        memo.choice[s] = best_choice
        return best

    scheduler(view.full)
    stages: list[Stage] = []
    s = view.full
    while s:
        e, strategy, payload, latency = memo.choice[s]
        stages.insert(0, _make_stage(strategy, payload, latency))
        s &= ~e
    return Schedule(block.index, tuple(stages)), memo


def schedule_network(g: ComputationGraph, m: CostModel, p: PruningStrategy | None = None,
                     mode: StageMode = StageMode.BOTH, parallel: bool = False) -> NetworkSchedule:
    """Schedule each block independently and concatenate in block order."""
    def one(b):
        return dp_schedule(g, b, m, p, mode)[0]
    if parallel and len(g.blocks) > 1:
        with ThreadPoolExecutor() as pool:
            scheds = list(pool.map(one, g.blocks))
    else:
        scheds = [one(b) for b in g.blocks]
    return NetworkSchedule(tuple(scheds))


# ---------------------------------------------------------------- checking / evaluation

def _check_ids(g: ComputationGraph, ids):
    unknown = [i for i in ids if i not in g.operators]
    if unknown:
        raise MismatchError(f"schedule references unknown operators {sorted(unknown)}")


def stage_latency(g: ComputationGraph, stage: Stage, m: CostModel) -> float:
    if stage.strategy is Strategy.MERGE:
        if stage.merge is None:
            raise MismatchError("merge stage without a merge plan")
        _check_ids(g, stage.merge.members)
        return m.merged_stage_latency(stage.merge.merged, stage.merge.split)
    for grp in stage.groups:
        _check_ids(g, grp)
    return m.concurrent_stage_latency([[g.operators[i] for i in grp] for grp in stage.groups])


def simulate(g: ComputationGraph, q: Schedule | NetworkSchedule, m: CostModel) -> float:
    """Re-evaluate a schedule stage by stage, independently of the DP."""
    scheds = q.blocks if isinstance(q, NetworkSchedule) else (q,)
    total = 0.0
    for sched in scheds:
        block_total = 0.0
        for stage in sched.stages:
            block_total += stage_latency(g, stage, m)
        total += block_total
    return total if isinstance(q, NetworkSchedule) else block_total


def evaluate(g: ComputationGraph, q: Schedule, m: CostModel) -> Schedule:
    """Copy of ``q`` with every stage latency filled in from ``m``."""
    stages = tuple(Stage(st.strategy, st.groups, stage_latency(g, st, m), st.merge) for st in q.stages)
    return Schedule(q.block, stages)


def validate_schedule(g: ComputationGraph, q: Schedule) -> None:
    """Raise :class:`MismatchError` unless ``q`` is a valid schedule of its block."""
    if not 0 <= q.block < len(g.blocks):
        raise MismatchError(f"schedule refers to block {q.block}, graph has {len(g.blocks)}")
    view = g.view(q.block)
    where: dict[str, tuple[int, int, int]] = {}
    for si, st in enumerate(q.stages):
        if not st.groups or any(not grp for grp in st.groups):
            raise MismatchError(f"stage {si} has an empty group")
        for gi, grp in enumerate(st.groups):
            for pos, op_id in enumerate(grp):
                if op_id not in view.index:
                    raise MismatchError(f"stage {si}: {op_id!r} is not in block {q.block}")
                if op_id in where:
                    raise MismatchError(f"operator {op_id!r} scheduled twice")
                where[op_id] = (si, gi, pos)
        if st.strategy is Strategy.MERGE:
            if st.merge is None or not can_merge(g, st.merge.members):
                raise MismatchError(f"stage {si} merges operators that cannot be merged")
        else:
            comps = groups_of(view, view.mask(st.ops))
            want = sorted(tuple(view.ids_of(c)) for c in comps)
            if sorted(st.groups) != want:
                raise MismatchError(f"stage {si} groups are not the connectivity partition")
    missing = set(view.ids) - where.keys()
    if missing:
        raise MismatchError(f"operators never scheduled: {sorted(missing)}")
    for u in view.ids:
        for vi in iter_bits(view.succ[view.index[u]]):
            v = view.ids[vi]
            su, gu, pu = where[u]
            sv, gv, pv = where[v]
            if su < sv:
                continue
            if su == sv and gu == gv and pu < pv and q.stages[su].strategy is Strategy.CONCURRENT:
                continue
            raise MismatchError(f"edge {u}->{v} violated by the stage order")


# ---------------------------------------------------------------- JSON

def _stage_to_dict(st: Stage) -> dict:
    if st.strategy is Strategy.MERGE:
        groups = {"merged": operator_to_dict(st.merge.merged),
                  "offsets": [list(o) for o in st.merge.channel_offsets]}
    else:
        groups = [list(grp) for grp in st.groups]
    return {"strategy": st.strategy.value, "groups": groups, "latency": st.latency}


def schedule_to_dict(q: NetworkSchedule) -> dict:
    return {
        "blocks": [{"stages": [_stage_to_dict(st) for st in b.stages], "total_latency": b.total_latency}
                   for b in q.blocks],
        "network_latency": q.network_latency,
    }


def schedule_to_json(q: NetworkSchedule) -> str:
    return json.dumps(schedule_to_dict(q), indent=2) + "\n"


def load_schedule(text: str, g: ComputationGraph) -> NetworkSchedule:
    """Parse schedule JSON against ``g``; merge plans are rebuilt and cross-checked."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or set(doc) != {"blocks", "network_latency"}:
        raise SchemaError("schedule: expected keys 'blocks' and 'network_latency'")
    if len(doc["blocks"]) != len(g.blocks):
        raise MismatchError(f"schedule has {len(doc['blocks'])} blocks, graph has {len(g.blocks)}")
    blocks = []
    for bi, b in enumerate(doc["blocks"]):
        if not isinstance(b, dict) or set(b) != {"stages", "total_latency"}:
            raise SchemaError(f"blocks[{bi}]: expected keys 'stages' and 'total_latency'")
        stages = []
        for si, st in enumerate(b["stages"]):
            if not isinstance(st, dict) or set(st) != {"strategy", "groups", "latency"}:
                raise SchemaError(f"blocks[{bi}].stages[{si}]: expected strategy/groups/latency")
            try:
                strategy = Strategy(st["strategy"])
            except ValueError:
                raise SchemaError(f"unknown strategy {st['strategy']!r}") from None
            if strategy is Strategy.MERGE:
                offsets = st["groups"]["offsets"]
                members = [o[0] for o in offsets]
                _check_ids(g, members)
                try:
                    plan = build_merge(g, members)
                except Exception as exc:
                    raise MismatchError(f"blocks[{bi}].stages[{si}]: {exc}") from None
                if ([list(o) for o in plan.channel_offsets] != [list(o) for o in offsets]
                        or operator_to_dict(plan.merged) != st["groups"]["merged"]):
                    raise MismatchError(f"blocks[{bi}].stages[{si}]: merge plan does not match the graph")
                stages.append(Stage(strategy, (plan.members,), st["latency"], plan))
            else:
                groups = tuple(tuple(grp) for grp in st["groups"])
                for grp in groups:
                    _check_ids(g, grp)
                stages.append(Stage(strategy, groups, st["latency"]))
        sched = Schedule(bi, tuple(stages))
        validate_schedule(g, sched)
        blocks.append(sched)
    return NetworkSchedule(tuple(blocks))
