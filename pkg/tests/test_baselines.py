import pytest
from hypothesis import given, settings, strategies as st

from iosched import (StageMode, Strategy, TooLargeError, brute_force_optimal, count_all, dp_schedule,
                     greedy_schedule, sequential_schedule, simulate, validate_schedule)
from iosched import generators as gen
from iosched.graph import build_graph

from conftest import MS, dag, random_instances, table_model

FIG2 = {"a": [], "b": ["a"], "c": [], "d": []}


def one_per_stage(q):
    return [st.groups for st in q.stages]


class TestSequential:
    def test_chain(self):
        g = dag({"a": [], "b": ["a"], "c": ["b"]})
        assert one_per_stage(sequential_schedule(g, 0)) == [(("a",),), (("b",),), (("c",),)]

    def test_fig2(self):
        q = sequential_schedule(dag(FIG2), 0)
        assert len(q.stages) == 4
        assert all(len(st.groups) == 1 and len(st.groups[0]) == 1 for st in q.stages)

    def test_empty(self):
        assert sequential_schedule(build_graph("e", [], [[]], []), 0).stages == ()

    def test_latencies_filled_when_model_given(self, fig5, fig5_model):
        assert sequential_schedule(fig5, 0, fig5_model).total_latency == pytest.approx(6 * MS)


class TestGreedy:
    def test_fig2(self):
        q = greedy_schedule(dag(FIG2), 0)
        assert [st.ops for st in q.stages] == [{"a", "c", "d"}, {"b"}]

    def test_chain_equals_sequential(self):
        g = dag({"a": [], "b": ["a"], "c": ["b"], "d": ["c"]})
        assert greedy_schedule(g, 0) == sequential_schedule(g, 0)

    def test_independent(self):
        g = dag({k: [] for k in "pqrst"})
        q = greedy_schedule(g, 0)
        assert len(q.stages) == 1 and len(q.stages[0].groups) == 5

    def test_fig5_latency(self, fig5, fig5_model):
        assert simulate(fig5, greedy_schedule(fig5, 0), fig5_model) == pytest.approx(5 * MS)

    def test_valid_on_random(self):
        for seed, g, m in random_instances(50):
            validate_schedule(g, greedy_schedule(g, 0))
            validate_schedule(g, sequential_schedule(g, 0))


class TestBruteForce:
    def test_fig5(self, fig5, fig5_model):
        q, total = brute_force_optimal(fig5, 0, fig5_model, StageMode.PARALLEL)
        assert total == 3 * MS
        assert q == dp_schedule(fig5, 0, fig5_model, mode=StageMode.PARALLEL)[0]

    def test_single_op(self):
        g = dag({"a": []})
        assert brute_force_optimal(g, 0, table_model({"a": 2.5}))[1] == 2.5 * MS

    def test_two_equal_independent(self):
        g = dag({"a": [], "b": []})
        q, total = brute_force_optimal(g, 0, table_model({"a": 2, "b": 2}), StageMode.PARALLEL)
        assert total == 2 * MS
        assert len(q.stages) == 1 and q.stages[0].strategy is Strategy.CONCURRENT

    def test_size_guard(self):
        g = gen.random_dag(15, 0.5, 0)
        with pytest.raises(TooLargeError):
            brute_force_optimal(g, 0, table_model({}))

    def test_fig4_merge(self):
        g = gen.fig4()
        m = table_model({"a": 2, "b": 2, "a&b": 1, "split(a&b)": 0.1, "c": 1, "d": 1, "e": 2})
        q, total = brute_force_optimal(g, 0, m)
        assert total == pytest.approx(3.1 * MS)
        assert q == dp_schedule(g, 0, m)[0]


class TestCountAll:
    def test_fig5(self, fig5):
        c = count_all(fig5, 0)
        assert (c.n, c.states, c.transitions, c.schedules) == (3, 6, 12, 8)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_chain_compositions(self, n):
        g = gen.chains(n, 1)
        c = count_all(g, 0)
        assert c.schedules == 2 ** (n - 1)
        assert c.states == n + 1
        assert c.transitions == n * (n + 1) // 2

    def test_pruning_shrinks(self):
        from iosched import PruningStrategy
        g = gen.chains(3, 2)
        full = count_all(g, 0)
        pruned = count_all(g, 0, PruningStrategy(1, 1))
        # one op per stage: every interleaving of two 3-chains
        assert pruned.schedules == 20
        assert pruned.transitions < full.transitions

    def test_empty(self):
        c = count_all(build_graph("e", [], [[]], []), 0)
        assert (c.states, c.transitions, c.schedules) == (1, 0, 1)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 8), p=st.floats(0, 1), seed=st.integers(0, 5000))
def test_schedule_count_matches_path_enumeration(n, p, seed):
    # schedules = ordered partitions into successive endings, counted directly
    g = gen.random_dag(n, p, seed)
    v = g.view(0)

    def endings(s):
        sub = s
        while sub:
            rest = s & ~sub
            if all(not (v.succ[i] & rest) for i in range(n) if sub >> i & 1):
                yield sub
            sub = (sub - 1) & s

    def paths(s):
        return 1 if not s else sum(paths(s & ~e) for e in endings(s))

    assert count_all(g, 0).schedules == paths(v.full)
