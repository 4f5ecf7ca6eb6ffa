import random

import pytest

from iosched import AnalyticRoofline, DeviceProfile, LatencyTable, TableCostModel
from iosched import generators as gen

MS = 1e-3

PURE_MAX = DeviceProfile("pure_max", peak_flops=1e15, mem_bandwidth=1e15, max_concurrent_groups=64)

# criterion id -> (passed, detail); filled by test_acceptance, printed at session end
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def table_model(entries_ms: dict, fallback=PURE_MAX, **stages):
    table = LatencyTable({k: v * MS for k, v in entries_ms.items()}, stages)
    return TableCostModel(table, AnalyticRoofline(fallback) if fallback else None)


def random_instances(count=200, n_max=10, p_lo=0.3, p_hi=0.7):
    """Seeded (seed, graph, cost model) stream shared by the oracle-style checks."""
    for seed in range(count):
        rng = random.Random(seed)
        n = rng.randint(1, n_max)
        g = gen.random_dag(n, rng.uniform(p_lo, p_hi), seed)
        yield seed, g, gen.random_table_model(g, rng)


@pytest.fixture
def fig5():
    return gen.fig5()


@pytest.fixture
def fig5_model():
    # a=1, b=2, c=3 ms; concurrency is a plain max with no overheads
    return table_model({"a": 1, "b": 2, "c": 3})


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c.split()[0])):
        ok, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}")


def dag(preds: dict, blocks=None, kind=None, name="t"):
    """Small ConvRelu graph from ``{id: [inputs]}``; roots read ``x``."""
    from iosched.generators import _op
    from iosched.graph import GraphInput, OperatorKind, build_graph

    shape = (1, 16, 8, 8)
    ops = [_op(k, kind or OperatorKind.CONV_RELU, v or ["x"], 16, shape, (3, 3)) for k, v in preds.items()]
    return build_graph(name, ops, blocks or [list(preds)], [GraphInput("x", shape)])
