"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is printed at the end."""
import subprocess
import sys
import time
from contextlib import contextmanager
from math import comb

from iosched import (PROFILES, AnalyticRoofline, PruningStrategy, Strategy, brute_force_optimal,
                     complexity_bound, count_all, dp_schedule, enumerate_endings, format_sig,
                     graph_width, greedy_schedule, is_ending, max_antichain_brute, schedule_network,
                     schedule_to_json, sequential_schedule, simulate, validate_schedule)
from iosched import generators as gen
from iosched.analysis import reachability

from conftest import ACCEPTANCE, random_instances

INSTANCES = None


def instances():
    global INSTANCES
    if INSTANCES is None:
        INSTANCES = list(random_instances(200))
    return INSTANCES


@contextmanager
def criterion(cid, label):
    """Record PASS/FAIL for ``cid``; the body sets ``notes`` entries for the detail text."""
    notes = []
    start = time.perf_counter()
    try:
        yield notes
    except AssertionError as exc:
        ACCEPTANCE[cid] = (False, f"{label}: {'; '.join(notes + [str(exc).splitlines()[0]])}")
        raise
    ACCEPTANCE[cid] = (True, f"{label}: {'; '.join(notes)} ({time.perf_counter() - start:.2f} s)")


def test_c1_oracle_equivalence():
    with criterion("1", "oracle equivalence") as notes:
        start = time.perf_counter()
        bad = []
        rows = instances()
        for seed, g, m in rows:
            dp = dp_schedule(g, 0, m)[0].total_latency
            bf = brute_force_optimal(g, 0, m)[1]
            if dp != bf:
                bad.append((seed, dp, bf))
        elapsed = time.perf_counter() - start
        notes.append(f"{len(rows) - len(bad)}/{len(rows)} bit-exact in {elapsed:.1f} s")
        assert len(rows) >= 200
        assert not bad, f"mismatches {bad[:3]}"
        assert elapsed < 60


def test_c2_fig5_reproduction():
    with criterion("2", "fig5 state graph") as notes:
        start = time.perf_counter()
        g = gen.fig5()
        c = count_all(g, 0)
        v = g.view(0)
        endings = list(enumerate_endings(v, v.full))
        notes.append(f"states {c.states}, transitions {c.transitions}, endings {len(endings)}")
        assert (c.states, c.transitions, len(endings)) == (6, 12, 5)
        assert time.perf_counter() - start < 1


def test_c3_bound_tightness():
    with criterion("3", "bound tightness on chains") as notes:
        start = time.perf_counter()
        got = {}
        for c, d in ((2, 2), (3, 2), (2, 3)):
            got[(c, d)] = (count_all(gen.chains(c, d), 0).transitions, comb(c + 2, 2) ** d)
        over = []
        for seed, g, _ in instances():
            t = count_all(g, 0).transitions
            if t > complexity_bound(len(g.operators), graph_width(g, 0).width):
                over.append(seed)
        notes.append(", ".join(f"{cd}: {t} vs {want}" for cd, (t, want) in got.items()))
        notes.append(f"bound held on {200 - len(over)}/200 random DAGs")
        assert not over
        assert all(t == want for t, want in got.values()), "transitions differ from C(c+2,2)^d"
        assert time.perf_counter() - start < 5


def test_c4_table_arithmetic():
    with criterion("4", "bound arithmetic") as notes:
        a, b = format_sig(complexity_bound(11, 6)), format_sig(complexity_bound(33, 8))
        notes.append(f"(11,6) -> {a}, (33,8) -> {b}")
        assert (a, b) == ("2.6e4", "3.7e9")


def test_c5_dominance():
    with criterion("5", "dominance over baselines") as notes:
        worse = []
        for seed, g, m in instances():
            ios = dp_schedule(g, 0, m)[0].total_latency
            if ios > simulate(g, greedy_schedule(g, 0), m) or ios > simulate(g, sequential_schedule(g, 0), m):
                worse.append(seed)
        g = gen.inception_block()
        m = AnalyticRoofline(PROFILES["compute_bound"])
        ios = dp_schedule(g, 0, m)[0].total_latency
        greedy = simulate(g, greedy_schedule(g, 0), m)
        seq = simulate(g, sequential_schedule(g, 0), m)
        notes.append(f"never worse on {200 - len(worse)}/200")
        notes.append(f"inception: IOS {ios * 1e3:.4f} ms, greedy {greedy * 1e3:.4f}, sequential {seq * 1e3:.4f}")
        assert not worse, f"IOS worse on seeds {worse[:5]}"
        assert ios < greedy and ios < seq


def test_c6_pruning_tradeoff():
    with criterion("6", "pruning trade-off") as notes:
        g = gen.inception_block()
        m = AnalyticRoofline(PROFILES["compute_bound"])
        ps = [PruningStrategy(1, 8), PruningStrategy(2, 8), PruningStrategy(3, 8), None]
        lat, trans = [], []
        for p in ps:
            q, memo = dp_schedule(g, 0, m, p)
            lat.append(q.total_latency)
            trans.append(memo.transitions)
        notes.append("latency ms " + " >= ".join(f"{x * 1e3:.5f}" for x in lat))
        notes.append("transitions " + " < ".join(map(str, trans)))
        assert all(a >= b for a, b in zip(lat, lat[1:]))
        # tighter pruning visits strictly fewer transitions
        assert all(a < b for a, b in zip(trans, trans[1:]))


def test_c7_width():
    with criterion("7", "width correctness") as notes:
        import random
        start = time.perf_counter()
        bad = []
        for seed in range(100):
            rng = random.Random(seed)
            g = gen.random_dag(rng.randint(1, 12), rng.uniform(0.1, 0.7), seed)
            cert = graph_width(g, 0)
            v = g.view(0)
            reach = reachability(v)
            ok = cert.width == max_antichain_brute(g, 0)
            ok &= sorted(i for c in cert.chains for i in c) == sorted(v.ids)
            for chain in cert.chains:
                for x, y in zip(chain, chain[1:]):
                    ok &= bool(reach[v.index[x]] >> v.index[y] & 1)
            if not ok:
                bad.append(seed)
        elapsed = time.perf_counter() - start
        notes.append(f"{100 - len(bad)}/100 match with valid chain witness in {elapsed:.1f} s")
        assert not bad
        assert elapsed < 30


def test_c8_specialization_flip():
    with criterion("8", "specialization flip") as notes:
        g = gen.kernel_pair()
        out = {}
        for name in ("compute_bound", "memory_bound"):
            q = schedule_network(g, AnalyticRoofline(PROFILES[name]))
            strategies = [st.strategy for b in q.blocks for st in b.stages]
            out[name] = (strategies, schedule_to_json(q))
        notes.append(", ".join(f"{k}: {[s.value for s in v[0]]}" for k, v in out.items()))
        assert out["compute_bound"][0] == [Strategy.CONCURRENT]
        assert out["memory_bound"][0] == [Strategy.MERGE]
        assert out["compute_bound"][1] != out["memory_bound"][1]
        again = schedule_to_json(schedule_network(g, AnalyticRoofline(PROFILES["memory_bound"])))
        assert again == out["memory_bound"][1]


def test_c9_invariants():
    with criterion("9", "invariant suite") as notes:
        # ending-union closure and simulate == cost[V] with valid schedules
        for seed, g, m in instances()[:100]:
            v = g.view(0)
            ends = [e for e, _ in enumerate_endings(v, v.full)]
            for a in ends[:12]:
                for b in ends[:12]:
                    assert is_ending(v, v.full, a | b), f"union of endings not an ending (seed {seed})"
            q, memo = dp_schedule(g, 0, m)
            assert simulate(g, q, m) == memo.cost[v.full], f"simulate != cost[V] (seed {seed})"
            validate_schedule(g, q)
        notes.append("union closure, simulate = cost[V], validity on 100 DAGs")

        cmd = [sys.executable, "-m", "iosched.cli"]
        graph = subprocess.run(cmd + ["gen", "inception_block"], capture_output=True, check=True).stdout
        runs = [subprocess.run(cmd + ["optimize", "--graph", "/dev/stdin", "--profile", "compute_bound", "--json"],
                               input=graph, capture_output=True, check=True).stdout for _ in range(2)]
        assert runs[0] == runs[1], "two optimize runs differ"
        notes.append("two CLI runs byte-identical")

        counts = [count_all(gen.chains(n, 1), 0).schedules for n in range(1, 7)]
        assert counts == [2 ** (n - 1) for n in range(1, 7)]
        notes.append(f"chain schedules {counts}")
