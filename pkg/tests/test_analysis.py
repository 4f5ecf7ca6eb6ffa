import json
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from iosched import (bound_check, complexity_bound, count_all, format_sig, graph_width,
                     max_antichain_brute)
from iosched import generators as gen
from iosched.analysis import reachability
from iosched.graph import build_graph, iter_bits

from conftest import dag


def check_certificate(g, cert):
    v = g.view(0)
    reach = reachability(v)
    covered = [i for c in cert.chains for i in c]
    assert sorted(covered) == sorted(v.ids)
    for chain in cert.chains:
        for u, w in zip(chain, chain[1:]):
            assert reach[v.index[u]] >> v.index[w] & 1
    members = list(iter_bits(cert.antichain))
    assert len(members) == cert.width
    for a in members:
        for b in members:
            assert not reach[a] >> b & 1


class TestWidth:
    def test_chains(self):
        assert graph_width(gen.chains(2, 3), 0).width == 3

    def test_fig5(self, fig5):
        cert = graph_width(fig5, 0)
        assert cert.width == 2
        assert fig5.view(0).set_of(cert.antichain) == {"a", "c"} or \
            fig5.view(0).set_of(cert.antichain) == {"b", "c"}
        check_certificate(fig5, cert)

    def test_single_chain(self):
        assert graph_width(gen.chains(5, 1), 0).width == 1

    def test_inception(self):
        g = gen.inception_block()
        cert = graph_width(g, 0)
        assert cert.width == 6 == max_antichain_brute(g, 0)
        check_certificate(g, cert)

    def test_empty(self):
        assert graph_width(build_graph("e", [], [[]], []), 0).width == 0


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 12), p=st.floats(0, 1), seed=st.integers(0, 10_000))
def test_width_matches_brute_force(n, p, seed):
    g = gen.random_dag(n, p, seed)
    cert = graph_width(g, 0)
    assert cert.width == max_antichain_brute(g, 0)
    check_certificate(g, cert)


class TestBound:
    def test_table_values(self):
        assert format_sig(complexity_bound(11, 6)) == "2.6e4"
        assert format_sig(complexity_bound(33, 8)) == "3.7e9"

    @pytest.mark.parametrize("d", range(1, 7))
    def test_full_width_is_three_to_the_d(self, d):
        assert complexity_bound(d, d) == 3 ** d

    def test_exact_rational(self):
        assert complexity_bound(3, 2) == Fraction(7 * 5, 8) ** 2

    @pytest.mark.parametrize("n,d", [(0, 1), (3, 0), (3, 4)])
    def test_bad_args(self, n, d):
        with pytest.raises(ValueError):
            complexity_bound(n, d)

    @pytest.mark.parametrize("x,want", [(25650, "2.6e4"), (19.140625, "1.9e1"), (1, "1.0e0"),
                                        (Fraction(1, 3), "3.3e-1"), (10 ** 40 * 7, "7.0e40")])
    def test_format(self, x, want):
        assert format_sig(x) == want

    def test_fig5_report(self, fig5):
        r = bound_check(fig5, 0)
        assert (r.n, r.width, r.transitions) == (3, 2, 12)
        assert r.bound == Fraction(35, 8) ** 2
        assert r.transitions <= r.bound

    def test_single_op(self):
        r = bound_check(dag({"a": []}), 0)
        assert r.transitions == 1 and r.bound == 3
        assert r.pairs == 3

    @pytest.mark.parametrize("c,d", [(2, 2), (3, 2), (2, 3), (1, 4), (4, 1), (3, 3)])
    def test_chains_pair_count_is_tight(self, c, d):
        # the bound counts (S, S') pairs including the empty ending, and meets it exactly here
        r = bound_check(gen.chains(c, d), 0)
        assert r.width == d
        assert r.states == (c + 1) ** d
        assert r.pairs == comb(c + 2, 2) ** d == r.bound

    def test_as_dict_is_json(self, fig5):
        doc = bound_check(fig5, 0).as_dict()
        assert json.loads(json.dumps(doc)) == doc
        assert doc["bound"] == "1.9e1" and doc["schedules"] == "8"

    def test_inception_counts(self):
        r = bound_check(gen.inception_block(), 0)
        assert (r.n, r.width) == (11, 6)
        assert r.transitions <= r.bound
        assert format_sig(r.bound) == "2.6e4"


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 10), p=st.floats(0, 1), seed=st.integers(0, 10_000))
def test_bound_holds_on_random(n, p, seed):
    g = gen.random_dag(n, p, seed)
    r = bound_check(g, 0)
    assert r.transitions + r.states <= r.bound
    assert r.transitions == count_all(g, 0).transitions
