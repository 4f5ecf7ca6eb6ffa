"""Deterministic latency models standing in for on-device measurement.

Two model families share one call surface:

* :class:`AnalyticRoofline`: roofline per operator with a small-kernel
  utilization ramp, stage-level contention beyond a capacity knee, and a
  fixed synchronization cost per stage.
* :class:`TableCostModel`: exact per-operator (and optionally per-stage)
  lookups, falling back to an analytic model when an entry is missing.

All latencies are in seconds.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .errors import MissingEntryError, SchemaError
from .graph import Operator

PROFILE_KEYS = ("name", "peak_flops", "mem_bandwidth", "kernel_overhead", "sync_overhead",
                "max_concurrent_groups", "contention_slope", "util_saturation_flops")


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    peak_flops: float
    mem_bandwidth: float
    kernel_overhead: float = 0.0
    sync_overhead: float = 0.0
    max_concurrent_groups: int = 1
    contention_slope: float = 0.0
    util_saturation_flops: float = 1.0

    def __post_init__(self):
        for k in ("peak_flops", "mem_bandwidth", "util_saturation_flops"):
            v = getattr(self, k)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{k} must be a finite positive number, got {v!r}")
        for k in ("kernel_overhead", "sync_overhead", "contention_slope"):
            v = getattr(self, k)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ValueError(f"{k} must be finite and non-negative, got {v!r}")
        if not isinstance(self.max_concurrent_groups, int) or self.max_concurrent_groups < 1:
            raise ValueError("max_concurrent_groups must be an integer >= 1")

    def contention_factor(self, k: int) -> float:
        return 1.0 + self.contention_slope * max(0, k - self.max_concurrent_groups)


def stage_descriptor(groups: Sequence[Sequence[str]]) -> str:
    """Permutation-invariant key of a concurrent stage: ``"a,b|c"``."""
    return "|".join(",".join(g) for g in sorted(tuple(sorted(g)) for g in groups))


class AnalyticRoofline:
    def __init__(self, profile: DeviceProfile):
        self.profile = profile

    def __repr__(self):
        return f"AnalyticRoofline({self.profile.name!r})"

    def op_latency(self, op: Operator) -> float:
        p = self.profile
        # flops / (peak * min(1, flops / sat)) == max(flops, sat) / peak for flops > 0;
        # the max form keeps the result monotone under rounding.
        compute = max(op.flops, p.util_saturation_flops) / p.peak_flops if op.flops > 0 else 0.0
        memory = op.bytes_total / p.mem_bandwidth
        return max(compute, memory) + p.kernel_overhead

    def group_latency(self, ops: Sequence[Operator]) -> float:
        if not ops:
            raise ValueError("group must be non-empty")
        total = 0.0
        for op in ops:
            total += self.op_latency(op)
        return total

    def compose_concurrent(self, group_latencies: Sequence[float]) -> float:
        p = self.profile
        return max(group_latencies) * p.contention_factor(len(group_latencies)) + p.sync_overhead

    def concurrent_stage_latency(self, groups: Sequence[Sequence[Operator]]) -> float:
        if not groups:
            raise ValueError("stage must have at least one group")
        return self.compose_concurrent([self.group_latency(g) for g in groups])

    def merged_stage_latency(self, merged: Operator, split: Operator) -> float:
        return self.op_latency(merged) + self.op_latency(split) + self.profile.sync_overhead


@dataclass(frozen=True)
class LatencyTable:
    op_entries: dict[str, float] = field(default_factory=dict)
    stage_entries: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for table in (self.op_entries, self.stage_entries):
            for k, v in table.items():
                if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                    raise ValueError(f"latency for {k!r} must be finite and non-negative")


class TableCostModel:
    """Lookup-driven model; ``fallback`` covers ids absent from the table.

    Concurrent stages without a stage entry are composed from per-op entries
    with the fallback's contention and sync parameters (plain max when there
    is no fallback).
    """

    def __init__(self, table: LatencyTable, fallback: AnalyticRoofline | None = None):
        self.table = table
        self.fallback = fallback

    def __repr__(self):
        return f"TableCostModel({len(self.table.op_entries)} ops, fallback={self.fallback!r})"

    @property
    def sync_overhead(self) -> float:
        return self.fallback.profile.sync_overhead if self.fallback else 0.0

    def op_latency(self, op: Operator) -> float:
        v = self.table.op_entries.get(op.id)
        if v is not None:
            return float(v)
        if self.fallback is None:
            raise MissingEntryError(f"no latency entry for operator {op.id!r}")
        return self.fallback.op_latency(op)

    def group_latency(self, ops: Sequence[Operator]) -> float:
        if not ops:
            raise ValueError("group must be non-empty")
        total = 0.0
        for op in ops:
            total += self.op_latency(op)
        return total

    def compose_concurrent(self, group_latencies: Sequence[float]) -> float:
        if self.fallback is None:
            return max(group_latencies)
        return self.fallback.compose_concurrent(group_latencies)

    def concurrent_stage_latency(self, groups: Sequence[Sequence[Operator]]) -> float:
        if not groups:
            raise ValueError("stage must have at least one group")
        if self.table.stage_entries:
            key = stage_descriptor([[op.id for op in g] for g in groups])
            v = self.table.stage_entries.get(key)
            if v is not None:
                return float(v)
        return self.compose_concurrent([self.group_latency(g) for g in groups])

    def merged_stage_latency(self, merged: Operator, split: Operator) -> float:
        return self.op_latency(merged) + self.op_latency(split) + self.sync_overhead


CostModel = AnalyticRoofline | TableCostModel


# Free-function surface mirroring the model methods.

def op_latency(m: CostModel, op: Operator) -> float:
    return m.op_latency(op)


def group_latency(m: CostModel, ops: Sequence[Operator]) -> float:
    return m.group_latency(ops)


def concurrent_stage_latency(m: CostModel, groups: Sequence[Sequence[Operator]]) -> float:
    return m.concurrent_stage_latency(groups)


def merged_stage_latency(m: CostModel, merged: Operator, split: Operator) -> float:
    return m.merged_stage_latency(merged, split)


# ---------------------------------------------------------------- I/O

def parse_profile(text: str) -> DeviceProfile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("profile: expected an object")
    missing = set(PROFILE_KEYS) - doc.keys()
    extra = doc.keys() - set(PROFILE_KEYS)
    if missing or extra:
        raise SchemaError(f"profile: missing {sorted(missing)}, unknown {sorted(extra)}")
    try:
        return DeviceProfile(**doc)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"profile: {exc}") from None


def profile_to_json(p: DeviceProfile) -> str:
    return json.dumps(asdict(p), indent=2) + "\n"


def parse_table(text: str) -> LatencyTable:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "ops" not in doc or doc.keys() - {"ops", "stages"}:
        raise SchemaError("latency table: expected {'ops': {...}, 'stages'?: {...}}")
    try:
        return LatencyTable(dict(doc["ops"]), dict(doc.get("stages", {})))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"latency table: {exc}") from None


def table_to_json(t: LatencyTable) -> str:
    doc = {"ops": t.op_entries}
    if t.stage_entries:
        doc["stages"] = t.stage_entries
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- bundled profiles

PROFILES = {
    # Every kernel is free of overheads and concurrency never contends: stage
    # latency reduces to the slowest group. Used with latency tables.
    "pure_max": DeviceProfile("pure_max", peak_flops=1e15, mem_bandwidth=1e15,
                              max_concurrent_groups=64),
    # Small batch: kernels under-fill the device, bandwidth is ample.
    "compute_bound": DeviceProfile("compute_bound", peak_flops=1.5e13, mem_bandwidth=9e11,
                                   kernel_overhead=5e-6, sync_overhead=2e-5,
                                   max_concurrent_groups=3, contention_slope=0.5,
                                   util_saturation_flops=1.5e9),
    # Large batch: activation traffic dominates and concurrent kernels fight
    # over the memory system.
    "memory_bound": DeviceProfile("memory_bound", peak_flops=1.5e13, mem_bandwidth=1e10,
                                  kernel_overhead=5e-6, sync_overhead=2e-5,
                                  max_concurrent_groups=1, contention_slope=1.5,
                                  util_saturation_flops=1e6),
}


def get_profile(name: str) -> DeviceProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise KeyError(f"unknown profile {name!r}; bundled: {sorted(PROFILES)}") from None
