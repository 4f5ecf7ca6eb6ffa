"""Operator merge: stack same-input convolutions into one wider convolution.

Kernels are zero-padded up to the largest height and width among the
members, so unequal kernels cost extra flops. The shared input is read once.
A ``Split`` operator recovers the member outputs from channel slices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import IllegalMergeError
from .graph import BYTES_PER_ELEMENT, ComputationGraph, Operator, OperatorKind


@dataclass(frozen=True)
class MergePlan:
    members: tuple[str, ...]
    merged: Operator
    split: Operator
    channel_offsets: tuple[tuple[str, int, int], ...]


def merged_id(member_ids: Iterable[str]) -> str:
    return "&".join(sorted(member_ids))


def _members(g: ComputationGraph, s) -> list[Operator]:
    return sorted((g.operators[i] for i in s), key=lambda op: op.id)


def can_merge(g: ComputationGraph, s: Iterable[str]) -> bool:
    """True iff ``s`` holds >= 2 ConvRelu ops with equal input sets, strides and input shapes."""
    ops = _members(g, s)
    if len(ops) < 2:
        return False
    first = ops[0]
    inputs = frozenset(first.inputs)
    return all(
        op.kind is OperatorKind.CONV_RELU
        and frozenset(op.inputs) == inputs
        and op.stride == first.stride
        and op.in_shape == first.in_shape
        for op in ops
    )


def build_merge(g: ComputationGraph, s: Iterable[str]) -> MergePlan:
    s = list(s)
    if not can_merge(g, s):
        raise IllegalMergeError(f"operators {sorted(s)} cannot be merged")
    ops = _members(g, s)
    kh = max(op.kernel_h for op in ops)
    kw = max(op.kernel_w for op in ops)
    out_c = sum(op.out_channels for op in ops)

    flops = 0.0
    for op in ops:
        if (op.kernel_h, op.kernel_w) == (kh, kw):
            flops += op.flops
        else:
            flops += op.flops * (kh * kw) / (op.kernel_h * op.kernel_w)
    # input is shared: every member after the first stops paying for its read
    in_bytes = float(BYTES_PER_ELEMENT * ops[0].batch * ops[0].in_channels
                     * ops[0].in_height * ops[0].in_width)
    total_read = sum(op.bytes_read for op in ops)
    bytes_read = max(total_read - (len(ops) - 1) * in_bytes, max(op.bytes_read for op in ops))
    bytes_written = sum(op.bytes_written for op in ops)

    mid = merged_id(op.id for op in ops)
    first = ops[0]
    merged = Operator(mid, OperatorKind.MERGED_CONV, first.inputs, out_c, first.in_shape,
                      (kh, kw), first.stride, flops, bytes_read, bytes_written)
    oh, ow = merged.out_hw
    split = Operator(f"split({mid})", OperatorKind.SPLIT, (mid,), out_c,
                     (first.batch, out_c, oh, ow), None, None, 0.0, 0.0, bytes_written)
    offsets = []
    start = 0
    for op in ops:
        offsets.append((op.id, start, start + op.out_channels))
        start += op.out_channels
    return MergePlan(tuple(op.id for op in ops), merged, split, tuple(offsets))
