"""Computation-graph IR: operators, blocks, JSON (de)serialization and queries.

A graph is parsed once and treated as immutable afterwards. Inside a block,
operators are addressed by dense indices (ascending sort of their ids) so a
subset of a block fits into one integer bitmask, the ``OpSet`` used by the
scheduler.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator

from .errors import BlockError, CycleError, DanglingRefError, SchemaError

MAX_BLOCK_OPS = 64
BYTES_PER_ELEMENT = 4  # fp32

#: A subset of one block's operators, bit ``i`` set for dense index ``i``.
OpSet = int


class OperatorKind(str, Enum):
    CONV_RELU = "ConvRelu"
    RELU_SEP_CONV = "ReluSepConv"
    POOL = "Pool"
    MATMUL = "Matmul"
    CONCAT = "Concat"
    ADD = "Add"
    IDENTITY = "Identity"
    MERGED_CONV = "MergedConv"
    SPLIT = "Split"


CONV_LIKE = frozenset({OperatorKind.CONV_RELU, OperatorKind.RELU_SEP_CONV, OperatorKind.MERGED_CONV})
DERIVED_ONLY = frozenset({OperatorKind.MERGED_CONV, OperatorKind.SPLIT})


@dataclass(frozen=True)
class Operator:
    id: str
    kind: OperatorKind
    inputs: tuple[str, ...]
    out_channels: int
    in_shape: tuple[int, int, int, int]
    kernel: tuple[int, int] | None = None
    stride: tuple[int, int] | None = None
    flops: float = 0.0
    bytes_read: float = 0.0
    bytes_written: float = 0.0

    @property
    def batch(self) -> int:
        return self.in_shape[0]

    @property
    def in_channels(self) -> int:
        return self.in_shape[1]

    @property
    def in_height(self) -> int:
        return self.in_shape[2]

    @property
    def in_width(self) -> int:
        return self.in_shape[3]

    @property
    def kernel_h(self) -> int | None:
        return self.kernel[0] if self.kernel else None

    @property
    def kernel_w(self) -> int | None:
        return self.kernel[1] if self.kernel else None

    @property
    def stride_h(self) -> int | None:
        return self.stride[0] if self.stride else None

    @property
    def stride_w(self) -> int | None:
        return self.stride[1] if self.stride else None

    @property
    def out_hw(self) -> tuple[int, int]:
        sh, sw = self.stride or (1, 1)
        return -(-self.in_height // sh), -(-self.in_width // sw)

    @property
    def bytes_total(self) -> float:
        return self.bytes_read + self.bytes_written


def derive_costs(kind: OperatorKind, in_shape, out_channels: int, kernel=None, stride=None,
                 n_inputs: int = 1) -> tuple[float, float, float]:
    """Standard (flops, bytes_read, bytes_written) estimates from shapes.

    Convolutions use "same" padding, so the output spatial size is
    ``ceil(in / stride)``. Pooling assumes a 3x3 window.
    """
    n, c, h, w = in_shape
    sh, sw = stride or (1, 1)
    oh, ow = -(-h // sh), -(-w // sw)
    b = BYTES_PER_ELEMENT
    in_elems = n * c * h * w
    out_elems = n * out_channels * oh * ow
    if kind in (OperatorKind.CONV_RELU, OperatorKind.MERGED_CONV):
        kh, kw = kernel
        flops = 2 * n * oh * ow * out_channels * c * kh * kw
        weights = out_channels * c * kh * kw
        return float(flops), float(b * (in_elems + weights)), float(b * out_elems)
    if kind is OperatorKind.RELU_SEP_CONV:
        kh, kw = kernel
        # depthwise kh x kw followed by pointwise 1x1
        flops = 2 * n * oh * ow * c * (kh * kw + out_channels)
        weights = c * kh * kw + c * out_channels
        return float(flops), float(b * (in_elems + weights)), float(b * out_elems)
    if kind is OperatorKind.MATMUL:
        k = c * h * w
        return float(2 * n * k * out_channels), float(b * (n * k + k * out_channels)), float(b * n * out_channels)
    if kind is OperatorKind.POOL:
        return float(9 * out_elems), float(b * in_elems), float(b * out_elems)
    if kind is OperatorKind.ADD:
        return float(out_elems * max(n_inputs - 1, 1)), float(b * in_elems * max(n_inputs, 1)), float(b * out_elems)
    # Concat, Identity, Split: pure data movement
    return 0.0, float(b * in_elems), float(b * out_elems)


@dataclass(frozen=True)
class GraphInput:
    id: str
    shape: tuple[int, int, int, int]


@dataclass(frozen=True)
class Block:
    index: int
    op_ids: tuple[str, ...]


class BlockView:
    """Dense-index adjacency of one block, built once per block.

    ``succ[i]``/``pred[i]`` are bitmasks of in-block successors/predecessors
    of dense operator ``i``; ``adj`` is their union (undirected view).
    """

    def __init__(self, graph: ComputationGraph, block: Block):
        self.block = block
        self.ids: tuple[str, ...] = tuple(sorted(block.op_ids))
        self.index = {op_id: i for i, op_id in enumerate(self.ids)}
        self.n = len(self.ids)
        self.full: OpSet = (1 << self.n) - 1
        self.succ = [0] * self.n
        self.pred = [0] * self.n
        for src, dst in graph.edges:
            if src in self.index and dst in self.index:
                self.succ[self.index[src]] |= 1 << self.index[dst]
                self.pred[self.index[dst]] |= 1 << self.index[src]
        self.adj = [s | p for s, p in zip(self.succ, self.pred)]
        self.topo = self._topo()
        self.rank = [0] * self.n
        for r, i in enumerate(self.topo):
            self.rank[i] = r

    def _topo(self) -> tuple[int, ...]:
        indeg = [bin(p).count("1") for p in self.pred]
        # dense index order equals ascending id order, so the heap breaks ties by id
        ready = [i for i in range(self.n) if indeg[i] == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            i = heapq.heappop(ready)
            order.append(i)
            for j in iter_bits(self.succ[i]):
                indeg[j] -= 1
                if indeg[j] == 0:
                    heapq.heappush(ready, j)
        return tuple(order)

    def mask(self, op_ids: Iterable[str]) -> OpSet:
        m = 0
        for op_id in op_ids:
            m |= 1 << self.index[op_id]
        return m

    def ids_of(self, s: OpSet) -> list[str]:
        """Member ids of ``s`` in topological order."""
        return [self.ids[i] for i in self.topo if s >> i & 1]

    def set_of(self, s: OpSet) -> frozenset[str]:
        return frozenset(self.ids[i] for i in iter_bits(s))


def iter_bits(s: OpSet) -> Iterator[int]:
    while s:
        low = s & -s
        yield low.bit_length() - 1
        s ^= low


def popcount(s: OpSet) -> int:
    return bin(s).count("1")


@dataclass(frozen=True, eq=True)
class ComputationGraph:
    name: str
    operators: dict[str, Operator]
    edges: frozenset[tuple[str, str]]
    blocks: tuple[Block, ...]
    graph_inputs: tuple[GraphInput, ...] = ()
    _views: dict = field(default_factory=dict, compare=False, repr=False)

    def view(self, block: Block | int) -> BlockView:
        idx = block if isinstance(block, int) else block.index
        v = self._views.get(idx)
        if v is None:
            v = self._views[idx] = BlockView(self, self.blocks[idx])
        return v

    def block_of(self, op_id: str) -> Block:
        for b in self.blocks:
            if op_id in b.op_ids:
                return b
        raise KeyError(op_id)


# ---------------------------------------------------------------- parsing

_TOP_KEYS = {"name", "inputs", "blocks", "operators"}
_OP_REQUIRED = {"id", "kind", "inputs", "out_channels", "in_shape"}
_OP_OPTIONAL = {"kernel", "stride", "flops", "bytes_read", "bytes_written"}


def _check_keys(obj, required, optional, where):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    missing = required - obj.keys()
    extra = obj.keys() - required - optional
    if missing:
        raise SchemaError(f"{where}: missing keys {sorted(missing)}")
    if extra:
        raise SchemaError(f"{where}: unknown keys {sorted(extra)}")


def _positive_ints(value, length, where):
    if (not isinstance(value, list) or len(value) != length
            or not all(isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in value)):
        raise SchemaError(f"{where}: expected {length} positive integers, got {value!r}")
    return tuple(value)


def _nonneg_number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
        raise SchemaError(f"{where}: expected a finite non-negative number, got {value!r}")
    return float(value)


def _parse_operator(obj, i) -> Operator:
    where = f"operators[{i}]"
    _check_keys(obj, _OP_REQUIRED, _OP_OPTIONAL, where)
    op_id = obj["id"]
    if not isinstance(op_id, str) or not op_id:
        raise SchemaError(f"{where}.id: expected non-empty string")
    try:
        kind = OperatorKind(obj["kind"])
    except ValueError:
        raise SchemaError(f"{where}.kind: unknown operator kind {obj['kind']!r}") from None
    if kind in DERIVED_ONLY:
        raise SchemaError(f"{where}.kind: {kind.value} is produced by merging, not accepted as input")
    inputs = obj["inputs"]
    if not isinstance(inputs, list) or not all(isinstance(x, str) for x in inputs):
        raise SchemaError(f"{where}.inputs: expected list of strings")
    out_c = obj["out_channels"]
    if isinstance(out_c, bool) or not isinstance(out_c, int) or out_c <= 0:
        raise SchemaError(f"{where}.out_channels: expected positive integer")
    in_shape = _positive_ints(obj["in_shape"], 4, f"{where}.in_shape")
    kernel = stride = None
    if kind in CONV_LIKE:
        if "kernel" not in obj:
            raise SchemaError(f"{where}: {kind.value} requires 'kernel'")
        kernel = _positive_ints(obj["kernel"], 2, f"{where}.kernel")
        stride = _positive_ints(obj.get("stride", [1, 1]), 2, f"{where}.stride")
    elif "kernel" in obj or "stride" in obj:
        raise SchemaError(f"{where}: {kind.value} does not take kernel/stride")
    flops, br, bw = derive_costs(kind, in_shape, out_c, kernel, stride, len(inputs))
    if "flops" in obj:
        flops = _nonneg_number(obj["flops"], f"{where}.flops")
    if "bytes_read" in obj:
        br = _nonneg_number(obj["bytes_read"], f"{where}.bytes_read")
    if "bytes_written" in obj:
        bw = _nonneg_number(obj["bytes_written"], f"{where}.bytes_written")
    return Operator(op_id, kind, tuple(inputs), out_c, in_shape, kernel, stride, flops, br, bw)


def build_graph(name: str, operators: Iterable[Operator], blocks: Iterable[Iterable[str]],
                graph_inputs: Iterable[GraphInput] = ()) -> ComputationGraph:
    """Assemble and validate a graph from already-constructed operators."""
    ops: dict[str, Operator] = {}
    for op in operators:
        if op.id in ops:
            raise SchemaError(f"duplicate operator id {op.id!r}")
        ops[op.id] = op
    inputs = tuple(graph_inputs)
    input_ids = {t.id for t in inputs}
    if input_ids & ops.keys():
        raise SchemaError(f"ids used both as graph input and operator: {sorted(input_ids & ops.keys())}")
    edges = set()
    for op in ops.values():
        for src in op.inputs:
            if src in ops:
                edges.add((src, op.id))
            elif src not in input_ids:
                raise DanglingRefError(f"operator {op.id!r} consumes unknown id {src!r}")
    _check_acyclic(ops, edges)

    block_list = []
    owner: dict[str, int] = {}
    for bi, ids in enumerate(blocks):
        ids = tuple(ids)
        if len(ids) > MAX_BLOCK_OPS:
            raise BlockError(f"block {bi} has {len(ids)} operators (max {MAX_BLOCK_OPS})")
        for op_id in ids:
            if op_id not in ops:
                raise DanglingRefError(f"block {bi} lists unknown operator {op_id!r}")
            if op_id in owner:
                raise BlockError(f"operator {op_id!r} appears in blocks {owner[op_id]} and {bi}")
            owner[op_id] = bi
        block_list.append(Block(bi, ids))
    unowned = ops.keys() - owner.keys()
    if unowned:
        raise BlockError(f"operators not assigned to any block: {sorted(unowned)}")
    for src, dst in edges:
        if owner[src] > owner[dst]:
            raise BlockError(f"edge {src}->{dst} goes from block {owner[src]} back to block {owner[dst]}")
    return ComputationGraph(name, ops, frozenset(edges), tuple(block_list), inputs)


def _check_acyclic(ops, edges):
    indeg = {k: 0 for k in ops}
    out: dict[str, list[str]] = {k: [] for k in ops}
    for s, d in edges:
        indeg[d] += 1
        out[s].append(d)
    stack = [k for k, v in indeg.items() if v == 0]
    seen = 0
    while stack:
        k = stack.pop()
        seen += 1
        for d in out[k]:
            indeg[d] -= 1
            if indeg[d] == 0:
                stack.append(d)
    if seen != len(ops):
        cyclic = sorted(k for k, v in indeg.items() if v > 0)
        raise CycleError(f"edge relation is cyclic among {cyclic}")


def parse_graph(text: str) -> ComputationGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    _check_keys(doc, _TOP_KEYS, set(), "graph")
    if not isinstance(doc["name"], str):
        raise SchemaError("graph.name: expected string")
    if not isinstance(doc["inputs"], list):
        raise SchemaError("graph.inputs: expected list")
    inputs = []
    for i, t in enumerate(doc["inputs"]):
        _check_keys(t, {"id", "shape"}, set(), f"inputs[{i}]")
        if not isinstance(t["id"], str):
            raise SchemaError(f"inputs[{i}].id: expected string")
        inputs.append(GraphInput(t["id"], _positive_ints(t["shape"], 4, f"inputs[{i}].shape")))
    if not isinstance(doc["operators"], list):
        raise SchemaError("graph.operators: expected list")
    ops = [_parse_operator(o, i) for i, o in enumerate(doc["operators"])]
    blocks = doc["blocks"]
    if not isinstance(blocks, list) or not all(
            isinstance(b, list) and all(isinstance(x, str) for x in b) for b in blocks):
        raise SchemaError("graph.blocks: expected list of lists of operator ids")
    return build_graph(doc["name"], ops, blocks, inputs)


def load_graph(path) -> ComputationGraph:
    with open(path) as f:
        return parse_graph(f.read())


def operator_to_dict(op: Operator) -> dict:
    d = {"id": op.id, "kind": op.kind.value, "inputs": list(op.inputs),
         "out_channels": op.out_channels}
    if op.kernel is not None:
        d["kernel"] = list(op.kernel)
        d["stride"] = list(op.stride)
    d["in_shape"] = list(op.in_shape)
    d.update(flops=op.flops, bytes_read=op.bytes_read, bytes_written=op.bytes_written)
    return d


def graph_to_dict(g: ComputationGraph) -> dict:
    return {
        "name": g.name,
        "inputs": [{"id": t.id, "shape": list(t.shape)} for t in g.graph_inputs],
        "blocks": [list(b.op_ids) for b in g.blocks],
        "operators": [operator_to_dict(op) for op in g.operators.values()],
    }


def serialize_graph(g: ComputationGraph) -> str:
    return json.dumps(graph_to_dict(g), indent=2) + "\n"


# ---------------------------------------------------------------- queries

def _resolve(g: ComputationGraph, block: Block | int) -> BlockView:
    return g.view(block)


def successors_within(g: ComputationGraph, block: Block | int, op: Operator | str) -> OpSet:
    v = _resolve(g, block)
    op_id = op if isinstance(op, str) else op.id
    return v.succ[v.index[op_id]]


def connected_groups(g: ComputationGraph, block: Block | int, s: OpSet) -> list[OpSet]:
    """Connected components of the subgraph induced by ``s`` (edges undirected).

    Components come out ordered by their lowest dense index; use
    ``BlockView.ids_of`` to list a component in topological order.
    """
    return groups_of(_resolve(g, block), s)


def groups_of(v: BlockView, s: OpSet) -> list[OpSet]:
    groups = []
    rest = s
    while rest:
        comp = frontier = rest & -rest
        while frontier:
            nxt = 0
            for i in iter_bits(frontier):
                nxt |= v.adj[i]
            frontier = nxt & s & ~comp
            comp |= frontier
        groups.append(comp)
        rest &= ~comp
    return groups


def topological_order(g: ComputationGraph) -> list[str]:
    """Kahn's algorithm over the whole graph, ties broken by ascending id."""
    indeg = {k: 0 for k in g.operators}
    out: dict[str, list[str]] = {k: [] for k in g.operators}
    for s, d in g.edges:
        indeg[d] += 1
        out[s].append(d)
    ready = [k for k, v in indeg.items() if v == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        k = heapq.heappop(ready)
        order.append(k)
        for d in out[k]:
            indeg[d] -= 1
            if indeg[d] == 0:
                heapq.heappush(ready, d)
    return order
