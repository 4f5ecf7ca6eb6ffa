"""Fixture graphs, random instances, and random cost models."""
from __future__ import annotations

import random

from .costs import AnalyticRoofline, DeviceProfile, LatencyTable, TableCostModel
from .graph import ComputationGraph, GraphInput, Operator, OperatorKind, build_graph, derive_costs

K = OperatorKind


def _op(op_id, kind, inputs, out_c, in_shape, kernel=None, stride=None) -> Operator:
    if kind in (K.CONV_RELU, K.RELU_SEP_CONV) and stride is None:
        stride = (1, 1)
    flops, br, bw = derive_costs(kind, in_shape, out_c, kernel, stride, len(inputs))
    return Operator(op_id, kind, tuple(inputs), out_c, tuple(in_shape), kernel, stride, flops, br, bw)


def chains(c: int, d: int, channels: int = 64, hw: int = 14) -> ComputationGraph:
    """``d`` independent chains of ``c`` 3x3 convolutions, one block."""
    if c < 1 or d < 1:
        raise ValueError("chains needs c >= 1 and d >= 1")
    shape = (1, channels, hw, hw)
    ops = []
    for j in range(d):
        prev = "x"
        for i in range(c):
            op_id = f"p{j}_{i}"
            ops.append(_op(op_id, K.CONV_RELU, [prev], channels, shape, (3, 3)))
            prev = op_id
    return build_graph(f"chains_{c}x{d}", ops, [[op.id for op in ops]], [GraphInput("x", shape)])


def random_dag(n: int, edge_p: float, seed: int, channels: int = 64, hw: int = 14) -> ComputationGraph:
    """Seeded random DAG in one block; edges only go from lower to higher index.

    Operators with several producers become ``Add``; the rest are
    convolutions with a random kernel, so same-input siblings can merge.
    """
    rng = random.Random(seed)
    shape = (1, channels, hw, hw)
    width = len(str(max(n - 1, 0)))
    ids = [f"n{i:0{width}d}" for i in range(n)]
    ops = []
    for j in range(n):
        preds = [ids[i] for i in range(j) if rng.random() < edge_p]
        kernel = rng.choice([(1, 1), (3, 3), (1, 3), (3, 1)])
        if len(preds) >= 2:
            ops.append(_op(ids[j], K.ADD, preds, channels, shape))
        else:
            ops.append(_op(ids[j], K.CONV_RELU, preds or ["x"], channels, shape, kernel))
    return build_graph(f"random_{n}_{edge_p}_{seed}", ops, [ids] if n else [], [GraphInput("x", shape)])


def fig5() -> ComputationGraph:
    """Three operators: a feeds b, c is independent of both."""
    shape = (1, 64, 14, 14)
    ops = [
        _op("a", K.CONV_RELU, ["x"], 64, shape, (3, 3)),
        _op("b", K.CONV_RELU, ["a"], 64, shape, (3, 3)),
        _op("c", K.MATMUL, ["x"], 10, shape),
    ]
    return build_graph("fig5", ops, [["a", "b", "c"]], [GraphInput("x", shape)])


def fig4() -> ComputationGraph:
    """Four convolutions and a matmul; a and b share their input and can merge."""
    shape = (1, 64, 28, 28)
    ops = [
        _op("a", K.CONV_RELU, ["x"], 128, shape, (3, 3)),
        _op("b", K.CONV_RELU, ["x"], 256, shape, (3, 3)),
        _op("c", K.CONV_RELU, ["a"], 128, (1, 128, 28, 28), (3, 3)),
        _op("d", K.CONV_RELU, ["c"], 128, (1, 128, 28, 28), (3, 3)),
        _op("e", K.MATMUL, ["b"], 256, (1, 256, 28, 28)),
    ]
    return build_graph("fig4", ops, [["a", "b", "c", "d", "e"]], [GraphInput("x", shape)])


def kernel_pair(batch: int = 32) -> ComputationGraph:
    """A 3x1 and a 1x3 convolution reading the same activation."""
    shape = (batch, 768, 8, 8)
    ops = [
        _op("f", K.CONV_RELU, ["x"], 192, shape, (3, 1)),
        _op("g", K.CONV_RELU, ["x"], 192, shape, (1, 3)),
    ]
    return build_graph("kernel_pair", ops, [["f", "g"]], [GraphInput("x", shape)])


def inception_block(batch: int = 1) -> ComputationGraph:
    """Last Inception-V3 block (8x8x2048 input) at Conv-Relu granularity: 11 ops, width 6."""
    x = (batch, 2048, 8, 8)
    ops = [
        _op("a", K.CONV_RELU, ["x"], 320, x, (1, 1)),
        _op("b", K.CONV_RELU, ["x"], 384, x, (1, 1)),
        _op("b1", K.CONV_RELU, ["b"], 384, (batch, 384, 8, 8), (1, 3)),
        _op("b2", K.CONV_RELU, ["b"], 384, (batch, 384, 8, 8), (3, 1)),
        _op("c", K.CONV_RELU, ["x"], 448, x, (1, 1)),
        _op("c2", K.CONV_RELU, ["c"], 384, (batch, 448, 8, 8), (3, 3)),
        _op("f", K.CONV_RELU, ["c2"], 384, (batch, 384, 8, 8), (1, 3)),
        _op("g", K.CONV_RELU, ["c2"], 384, (batch, 384, 8, 8), (3, 1)),
        _op("pool", K.POOL, ["x"], 2048, x),
        _op("p1", K.CONV_RELU, ["pool"], 192, x, (1, 1)),
        _op("concat", K.CONCAT, ["a", "b1", "b2", "f", "g", "p1"], 2048, x),
    ]
    return build_graph("inception_block", ops, [[op.id for op in ops]], [GraphInput("x", x)])


GENERATORS = {
    "chains": chains,
    "random_dag": random_dag,
    "inception_block": inception_block,
    "fig5": fig5,
    "fig4": fig4,
    "kernel_pair": kernel_pair,
}


def random_profile(rng: random.Random, name: str = "random") -> DeviceProfile:
    return DeviceProfile(
        name,
        peak_flops=rng.uniform(1e11, 1e13),
        mem_bandwidth=rng.uniform(1e9, 1e11),
        kernel_overhead=rng.uniform(0, 2e-5),
        sync_overhead=rng.uniform(0, 5e-5),
        max_concurrent_groups=rng.randint(1, 4),
        contention_slope=rng.uniform(0, 1),
        util_saturation_flops=rng.uniform(1e6, 1e9),
    )


def random_table(g: ComputationGraph, rng: random.Random, lo_ms: float = 0.1, hi_ms: float = 10.0
                 ) -> LatencyTable:
    return LatencyTable({op_id: rng.uniform(lo_ms, hi_ms) * 1e-3 for op_id in sorted(g.operators)})


def random_table_model(g: ComputationGraph, rng: random.Random) -> TableCostModel:
    """Random per-op table entries; merged ops and splits fall back to a random profile."""
    table = random_table(g, rng)
    return TableCostModel(table, AnalyticRoofline(random_profile(rng)))
