"""``ios`` command line: optimize, compare, analyze, export-dot, gen."""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from . import generators
from .analysis import bound_check
from .baselines import count_all, greedy_schedule, sequential_schedule
from .costs import PROFILES, AnalyticRoofline, TableCostModel, parse_profile, parse_table
from .dot import export_dot
from .errors import InfeasibleError, IOSError
from .graph import ComputationGraph, load_graph, serialize_graph
from .scheduler import (DEFAULT_PRUNING, NetworkSchedule, PruningStrategy, StageMode,
                        load_schedule, schedule_network, schedule_to_dict, schedule_to_json,
                        simulate)

COMMANDS = ("optimize", "compare", "analyze", "export-dot", "gen")


@dataclass
class RunConfig:
    command: str
    graph_path: str | None = None
    profile: str | None = None  # path or bundled profile name
    table_path: str | None = None
    r: int | None = None
    s: int | None = None
    no_prune: bool = False
    json: bool = False
    output_path: str | None = None
    schedule_path: str | None = None
    parallel: bool = False
    generator: str | None = None
    params: list[str] = field(default_factory=list)
    seed: int | None = None

    def __post_init__(self):
        for k in ("r", "s"):
            v = getattr(self, k)
            if v is not None and v < 1:
                raise ValueError(f"-{k} must be >= 1")


def _read(path: str) -> str:
    with open(path) as f:
        return f.read()


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def cost_model_from(cfg: RunConfig):
    profile = None
    if cfg.profile is not None:
        if cfg.profile in PROFILES and not os.path.exists(cfg.profile):
            profile = PROFILES[cfg.profile]
        else:
            profile = parse_profile(_read(cfg.profile))
    if cfg.table_path is not None:
        fallback = AnalyticRoofline(profile) if profile is not None else None
        return TableCostModel(parse_table(_read(cfg.table_path)), fallback)
    if profile is None:
        raise IOSError("a cost model is required: pass --profile and/or --table")
    return AnalyticRoofline(profile)


def pruning_from(cfg: RunConfig, g: ComputationGraph, default: PruningStrategy | None):
    if cfg.no_prune:
        return PruningStrategy.unpruned(max((len(b.op_ids) for b in g.blocks), default=1))
    if cfg.r is None and cfg.s is None:
        return default
    base = default or PruningStrategy.unpruned()
    return PruningStrategy(cfg.r or base.r, cfg.s or base.s)


def _sequential(g, m) -> NetworkSchedule:
    return NetworkSchedule(tuple(sequential_schedule(g, b, m) for b in g.blocks))


def _greedy(g, m) -> NetworkSchedule:
    return NetworkSchedule(tuple(greedy_schedule(g, b, m) for b in g.blocks))


def _ms(seconds: float) -> str:
    return f"{seconds * 1e3:.3f} ms"


def cmd_optimize(cfg: RunConfig) -> int:
    g = load_graph(cfg.graph_path)
    m = cost_model_from(cfg)
    p = pruning_from(cfg, g, DEFAULT_PRUNING)
    q = schedule_network(g, m, p, parallel=cfg.parallel)
    total = q.network_latency
    seq = simulate(g, _sequential(g, m), m)
    speedup = seq / total if total > 0 else 1.0
    if cfg.output_path:
        _write(cfg.output_path, schedule_to_json(q))
    if cfg.json:
        doc = {"network_latency_ms": total * 1e3, "sequential_ms": seq * 1e3, "speedup": speedup,
               "pruning": {"r": p.r, "s": p.s}, "schedule": schedule_to_dict(q)}
        print(json.dumps(doc, indent=2))
        return 0
    print(f"network latency: {_ms(total)}")
    print(f"{'block':>5}  {'stage':>5}  {'strategy':<10}  {'latency':>12}  groups")
    for sched in q.blocks:
        for si, st in enumerate(sched.stages):
            groups = " ".join("[" + ",".join(grp) + "]" for grp in st.groups)
            print(f"{sched.block:>5}  {si:>5}  {st.strategy.value:<10}  {_ms(st.latency):>12}  {groups}")
    print(f"sequential: {_ms(seq)}  speedup: {speedup:.2f}x")
    return 0


def cmd_compare(cfg: RunConfig) -> int:
    g = load_graph(cfg.graph_path)
    m = cost_model_from(cfg)
    p = pruning_from(cfg, g, DEFAULT_PRUNING)
    rows = [
        ("Sequential", simulate(g, _sequential(g, m), m)),
        ("Greedy", simulate(g, _greedy(g, m), m)),
        ("IOS-Merge", schedule_network(g, m, p, StageMode.MERGE, cfg.parallel).network_latency),
        ("IOS-Parallel", schedule_network(g, m, p, StageMode.PARALLEL, cfg.parallel).network_latency),
        ("IOS-Both", schedule_network(g, m, p, StageMode.BOTH, cfg.parallel).network_latency),
    ]
    best = min(lat for _, lat in rows)
    seq = rows[0][1]
    if cfg.json:
        doc = [{"schedule": name, "latency_ms": lat * 1e3,
                "normalized_throughput": best / lat if lat > 0 else 1.0,
                "speedup_vs_sequential": seq / lat if lat > 0 else 1.0} for name, lat in rows]
        print(json.dumps(doc, indent=2))
        return 0
    print(f"{'schedule':<13}  {'latency':>12}  {'norm. throughput':>16}  {'vs sequential':>13}")
    for name, lat in rows:
        norm = best / lat if lat > 0 else 1.0
        sp = seq / lat if lat > 0 else 1.0
        print(f"{name:<13}  {_ms(lat):>12}  {norm:>16.3f}  {sp:>12.2f}x")
    return 0


def cmd_analyze(cfg: RunConfig) -> int:
    g = load_graph(cfg.graph_path)
    rows = []
    p = pruning_from(cfg, g, None)
    for b in g.blocks:
        if not b.op_ids:
            continue
        row = {"block": b.index, **bound_check(g, b).as_dict()}
        if p is not None:
            pruned = count_all(g, b, p)
            row["pruned"] = {"r": p.r, "s": p.s, "transitions": pruned.transitions,
                             "schedules": str(pruned.schedules)}
        rows.append(row)
    _write(cfg.output_path, json.dumps(rows, indent=2) + "\n")
    return 0


def cmd_export_dot(cfg: RunConfig) -> int:
    g = load_graph(cfg.graph_path)
    q = load_schedule(_read(cfg.schedule_path), g) if cfg.schedule_path else None
    _write(cfg.output_path, export_dot(g, q))
    return 0


_GEN_PARAMS = {
    "chains": (int, int),
    "random_dag": (int, float, int),
    "inception_block": (int,),
    "kernel_pair": (int,),
    "fig5": (),
    "fig4": (),
}


def cmd_gen(cfg: RunConfig) -> int:
    name = cfg.generator
    if name not in generators.GENERATORS:
        raise IOSError(f"unknown generator {name!r}; choose from {sorted(generators.GENERATORS)}")
    types = _GEN_PARAMS[name]
    params = list(cfg.params)
    if name == "random_dag" and cfg.seed is not None and len(params) == 2:
        params.append(str(cfg.seed))
    if len(params) > len(types) or (name in ("chains", "random_dag") and len(params) != len(types)):
        raise IOSError(f"{name} takes parameters {[t.__name__ for t in types]}, got {params}")
    try:
        args = [t(v) for t, v in zip(types, params)]
        g = generators.GENERATORS[name](*args)
    except ValueError as exc:
        raise IOSError(f"{name}: {exc}") from None
    _write(cfg.output_path, serialize_graph(g))
    return 0


HANDLERS = {
    "optimize": cmd_optimize,
    "compare": cmd_compare,
    "analyze": cmd_analyze,
    "export-dot": cmd_export_dot,
    "gen": cmd_gen,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ios", description="Inter-operator scheduler for CNN graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def model_args(sp):
        sp.add_argument("--graph", dest="graph_path", required=True, help="graph JSON")
        sp.add_argument("--profile", help=f"profile JSON or bundled name ({', '.join(PROFILES)})")
        sp.add_argument("--table", dest="table_path", help="latency-table JSON")

    def prune_args(sp, what):
        sp.add_argument("-r", type=int, help=f"max operators per group ({what})")
        sp.add_argument("-s", type=int, help=f"max groups per stage ({what})")
        sp.add_argument("--no-prune", action="store_true", help="set r = s = block size")

    for name, helptext in (("optimize", "find the minimum-latency schedule"),
                           ("compare", "compare sequential, greedy and IOS variants")):
        sp = sub.add_parser(name, help=helptext)
        model_args(sp)
        prune_args(sp, "default 3 and 8")
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.add_argument("--parallel", action="store_true", help="schedule blocks concurrently")
        sp.add_argument("-o", "--output", dest="output_path", help="write schedule JSON here")

    sp = sub.add_parser("analyze", help="width, transition counts and complexity bound per block")
    sp.add_argument("--graph", dest="graph_path", required=True)
    prune_args(sp, "default: unpruned")
    sp.add_argument("-o", "--output", dest="output_path")

    sp = sub.add_parser("export-dot", help="Graphviz dot of a graph, optionally clustered by schedule")
    sp.add_argument("--graph", dest="graph_path", required=True)
    sp.add_argument("--schedule", dest="schedule_path", help="schedule JSON from optimize")
    sp.add_argument("-o", "--output", dest="output_path")

    sp = sub.add_parser("gen", help="write a fixture graph")
    sp.add_argument("generator", help=", ".join(generators.GENERATORS))
    sp.add_argument("params", nargs="*")
    sp.add_argument("--seed", type=int)
    sp.add_argument("-o", "--output", dest="output_path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(**vars(args))
        return HANDLERS[cfg.command](cfg)
    except InfeasibleError as exc:
        print(f"InfeasibleError: {exc}", file=sys.stderr)
        return 2
    except (IOSError, OSError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
