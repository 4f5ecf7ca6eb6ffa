"""Graphviz export of a graph, optionally clustered by a schedule."""
from __future__ import annotations

from .errors import MismatchError
from .graph import ComputationGraph

_PALETTE = ("#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3",
            "#fdb462", "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd")


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _label(op_id: str, kind: str) -> str:
    return _q(op_id + "\n" + kind).replace("\n", "\\n")


def export_dot(g: ComputationGraph, q=None) -> str:
    """Dot text for ``g``; with a schedule, each stage becomes a cluster.

    ``q`` is a ``Schedule`` or ``NetworkSchedule``. Groups of one stage get
    distinct fill colors; merged stages are drawn as a single group.
    """
    lines = [f"digraph {_q(g.name or 'graph')} {{", "  rankdir=TB;", "  node [shape=box, style=filled, fillcolor=white];"]
    placed: set[str] = set()
    if q is not None:
        scheds = getattr(q, "blocks", None) or (q,)
        for sched in scheds:
            for si, stage in enumerate(sched.stages):
                lines.append(f"  subgraph cluster_b{sched.block}_s{si} {{")
                label = f"block {sched.block} stage {si} ({stage.strategy.value})"
                lines.append(f"    label={_q(label)}; style=dashed;")
                for gi, grp in enumerate(stage.groups):
                    color = _PALETTE[gi % len(_PALETTE)]
                    for op_id in grp:
                        if op_id not in g.operators:
                            raise MismatchError(f"schedule references unknown operator {op_id!r}")
                        op = g.operators[op_id]
                        lines.append(f"    {_q(op_id)} [label={_label(op_id, op.kind.value)}, fillcolor={_q(color)}];")
                        placed.add(op_id)
                lines.append("  }")
    for op_id, op in g.operators.items():
        if op_id not in placed:
            lines.append(f"  {_q(op_id)} [label={_label(op_id, op.kind.value)}];")
    for src, dst in sorted(g.edges):
        lines.append(f"  {_q(src)} -> {_q(dst)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
