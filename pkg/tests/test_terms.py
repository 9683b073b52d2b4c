"""Term catalog: summaries, change scores, incremental maintenance.

The master oracle: for every term and dyad, the change score must equal
the difference of two full summaries (with the dyad present vs absent),
exactly for integer-valued terms and to 1e-12 for real-valued ones.
"""

import math
import random

import pytest

from ergmkit.errors import DataError
from ergmkit.network import Network, VertexAttributes
from ergmkit.terms import bind, summary_stats, change_stats, apply_toggle_stats

UNDIRECTED_FORMULA = ('edges + triangle + nodematch("grp") + nodematch("grp", diff=true)'
                      ' + nodefactor("grp") + nodecov("age") + absdiff("age")'
                      ' + concurrent + degree(2) + gwdegree(0.5, fixed=true)'
                      ' + gwesp(0.25, fixed=true)')
DIRECTED_FORMULA = ('edges + triangle + nodematch("grp") + nodefactor("grp", levels=[1])'
                    ' + nodecov("age") + absdiff("age")')


def make_attrs(n, seed=0):
    rng = random.Random(seed)
    attrs = VertexAttributes(n)
    attrs.add("grp", [rng.choice(["A", "B", "C"]) for _ in range(n)])
    attrs.add("age", [round(rng.uniform(18, 60), 2) for _ in range(n)])
    attrs.add("sex", ["M" if v % 2 == 0 else "F" for v in range(n)])
    return attrs


def random_net(n, directed=False, density=0.35, seed=0):
    rng = random.Random(seed)
    net = Network(n, directed=directed)
    for k in range(net.dyad_count()):
        if rng.random() < density:
            net.toggle(*net.dyad_at(k))
    return net


def brute_force_change(net, model, i, j):
    """Two full summaries: g(y with edge) - g(y without edge)."""
    had = net.has_edge(i, j)
    if not had:
        net.toggle(i, j)
    g_with = model.summary(net)
    net.toggle(i, j)
    g_without = model.summary(net)
    if had:
        net.toggle(i, j)
    return [a - b for a, b in zip(g_with, g_without)]


class TestSummaries:
    def test_empty(self):
        net = Network(6)
        model = bind("edges + triangle", net)
        assert summary_stats(net, model) == [0.0, 0.0]

    def test_complete_k4(self):
        net = Network(4)
        for k in range(6):
            net.toggle(*net.dyad_at(k))
        model = bind("edges + triangle", net)
        assert summary_stats(net, model) == [6.0, 4.0]

    def test_monogamous_heterosexual_summary(self):
        # Constructed 100-node network: 30 disjoint cross-sex edges.
        net = Network(100)
        attrs = make_attrs(100)
        for k in range(30):
            net.toggle(2 * k, 2 * k + 1)  # even ids are M, odd are F
        model = bind('edges + nodematch("sex") + concurrent', net, attrs)
        assert summary_stats(net, model) == [30.0, 0.0, 0.0]

    def test_k4_minus_edge_triangles(self):
        net = Network(4)
        for k in range(6):
            net.toggle(*net.dyad_at(k))
        model = bind("edges + triangle", net)
        delta = change_stats(net, model, 0, 1)
        assert delta == [1.0, 2.0]
        stats = apply_toggle_stats([6.0, 4.0], delta, adding=False)
        assert stats == [5.0, 2.0]
        net.toggle(0, 1)
        assert summary_stats(net, model) == stats


class TestChangeScores:
    def test_edges_always_one(self):
        net = random_net(6, seed=3)
        model = bind("edges", net)
        for k in range(net.dyad_count()):
            assert change_stats(net, model, *net.dyad_at(k)) == [1.0]

    def test_triangle_is_common_neighbors(self):
        net = random_net(7, seed=4)
        model = bind("triangle", net)
        for k in range(net.dyad_count()):
            i, j = net.dyad_at(k)
            cn = len(net.adj[i] & net.adj[j])
            assert change_stats(net, model, i, j) == [float(cn)]

    @pytest.mark.parametrize("seed", range(6))
    def test_brute_force_undirected(self, seed):
        n = random.Random(seed).randint(4, 8)
        net = random_net(n, density=0.45, seed=seed)
        model = bind(UNDIRECTED_FORMULA, net, make_attrs(n, seed))
        int_mask = [not name.startswith(("gwdegree", "gwesp", "nodecov", "absdiff"))
                    for name in model.names]
        for k in range(net.dyad_count()):
            i, j = net.dyad_at(k)
            fast = change_stats(net, model, i, j)
            slow = brute_force_change(net, model, i, j)
            for f, s, is_int in zip(fast, slow, int_mask):
                if is_int:
                    assert f == s
                else:
                    assert abs(f - s) < 1e-12

    @pytest.mark.parametrize("seed", range(4))
    def test_brute_force_directed(self, seed):
        n = random.Random(100 + seed).randint(4, 7)
        net = random_net(n, directed=True, density=0.4, seed=seed)
        model = bind(DIRECTED_FORMULA, net, make_attrs(n, seed))
        for k in range(net.dyad_count()):
            i, j = net.dyad_at(k)
            fast = change_stats(net, model, i, j)
            slow = brute_force_change(net, model, i, j)
            assert all(abs(f - s) < 1e-12 for f, s in zip(fast, slow))

    def test_state_independence(self):
        net = random_net(6, seed=8)
        model = bind(UNDIRECTED_FORMULA, net, make_attrs(6, 8))
        i, j = 1, 4
        before = change_stats(net, model, i, j)
        net.toggle(i, j)
        after = change_stats(net, model, i, j)
        assert all(abs(a - b) < 1e-12 for a, b in zip(before, after))


class TestIncremental:
    def test_apply_toggle(self):
        assert apply_toggle_stats([0.0, 0.0], [1.0, 0.0], adding=True) == [1.0, 0.0]

    def test_replay_long_run(self):
        # Random toggles with incremental updates stay exact for integer
        # terms and within 1e-9 drift for real ones.
        rng = random.Random(17)
        n = 12
        net = random_net(n, density=0.2, seed=17)
        model = bind(UNDIRECTED_FORMULA, net, make_attrs(n, 17))
        int_mask = [not name.startswith(("gwdegree", "gwesp", "nodecov", "absdiff"))
                    for name in model.names]
        stats = summary_stats(net, model)
        for _ in range(100_000):
            i, j = net.random_dyad(rng)
            delta = change_stats(net, model, i, j)
            adding = net.toggle(i, j)
            stats = apply_toggle_stats(stats, delta, adding)
        exact = summary_stats(net, model)
        for got, want, is_int in zip(stats, exact, int_mask):
            if is_int:
                assert got == want
            else:
                assert abs(got - want) <= 1e-9


class TestBinding:
    def test_missing_attribute(self):
        net = Network(5)
        with pytest.raises(DataError):
            bind('nodematch("race")', net, VertexAttributes(5))

    def test_free_decay_rejected(self):
        net = Network(5)
        with pytest.raises(DataError):
            bind("gwesp(0.25, fixed=false)", net)

    def test_directed_only_terms_rejected(self):
        net = Network(5, directed=True)
        for f in ("concurrent", "degree(2)", "gwdegree(0.5)", "gwesp(0.5)"):
            with pytest.raises(DataError):
                bind(f, net)

    def test_names(self):
        net = Network(6)
        attrs = make_attrs(6)
        model = bind('edges + nodematch("grp", diff=true) + nodefactor("grp")'
                     ' + gwesp(0.25, fixed=true)', net, attrs)
        assert model.names[0] == "edges"
        assert "nodematch.grp.A" in model.names
        assert "nodefactor.grp.B" in model.names  # first level A dropped
        assert "nodefactor.grp.A" not in model.names
        assert model.names[-1] == "gwesp.fixed.0.25"

    def test_nodefactor_levels(self):
        net = Network(6)
        attrs = make_attrs(6)
        keep_third = bind('nodefactor("grp", levels=[3])', net, attrs)
        assert keep_third.names == ["nodefactor.grp.C"]
        drop_last = bind('nodefactor("grp", levels=[-3])', net, attrs)
        assert drop_last.names == ["nodefactor.grp.A", "nodefactor.grp.B"]

    def test_assemble_coefs(self):
        net = Network(6)
        attrs = make_attrs(6)
        model = bind('edges + offset(nodematch("sex")) + offset(concurrent)',
                     net, attrs)
        coefs = model.assemble_coefs([0.5], [-math.inf, -math.inf])
        assert coefs[0] == 0.5
        assert coefs[1] == -math.inf and coefs[2] == -math.inf
