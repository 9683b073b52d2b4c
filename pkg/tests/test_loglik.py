"""Log-likelihood: exact baselines and bridge estimates vs enumeration."""

import math
import random

import numpy as np
import pytest

from helpers import exact_log_normalizer
from ergmkit.errors import DataError
from ergmkit.loglik import (BridgePlan, adaptive_bridge, bridge_loglik,
                            dyad_independent_loglik, evaluate_loglik,
                            kronecker_shift, null_deviance, voronoi_weights)
from ergmkit.network import Network
from ergmkit.terms import bind


def exact_loglik(n, formula, theta, net):
    """l(theta) by full enumeration: theta'g(y_obs) - log kappa."""
    model = bind(formula, net)
    g_obs = model.summary(net)
    kappa = exact_log_normalizer(n, formula, None, theta)
    return sum(t * g for t, g in zip(theta, g_obs)) - kappa


def five_node_net(seed=0, density=0.45):
    rng = random.Random(seed)
    net = Network(5)
    for k in range(net.dyad_count()):
        if rng.random() < density:
            net.toggle(*net.dyad_at(k))
    return net


class TestNullDeviance:
    @pytest.mark.parametrize("N,expected", [
        (0, 0.0),
        (12, 16.635532333438682),
        (45, 62.383246250395066),
    ])
    def test_values(self, N, expected):
        assert abs(null_deviance(N) - expected) < 1e-12
        assert abs(null_deviance(N) - 2 * N * math.log(2)) < 1e-12


class TestDyadIndependentBaseline:
    def test_edges_only_bernoulli(self):
        net = Network(10)
        rng = random.Random(1)
        while net.edge_count < 30:
            i, j = net.random_dyad(rng)
            if not net.has_edge(i, j):
                net.toggle(i, j)
        model = bind("edges", net)
        base = dyad_independent_loglik(net, model)
        want = 30 * math.log(30 / 45) + 15 * math.log(15 / 45)
        assert abs(base.loglik - want) < 1e-9
        assert abs(base.theta[0] - math.log(2.0)) < 1e-9

    def test_empty_net_boundary(self):
        net = Network(6)
        model = bind("edges", net)
        base = dyad_independent_loglik(net, model)
        assert base.boundary
        assert base.loglik == 0.0

    def test_mixed_model_zeroes_dependent_terms(self):
        net = five_node_net(2)
        model = bind("edges + triangle", net)
        base = dyad_independent_loglik(net, model)
        assert base.theta[1] == 0.0
        E, N = net.edge_count, net.dyad_count()
        assert abs(base.theta[0] - math.log(E / (N - E))) < 1e-9

    def test_grid_oracle(self):
        # brute-force maximization of the Bernoulli likelihood on p=1
        net = five_node_net(3)
        model = bind("edges", net)
        base = dyad_independent_loglik(net, model)
        grid = np.linspace(-3, 3, 20001)
        E, N = net.edge_count, net.dyad_count()
        vals = E * grid - N * np.logaddexp(0.0, grid)
        assert abs(base.loglik - vals.max()) < 1e-6

    def test_infinite_dependent_offset_rejected(self):
        net = five_node_net(4)
        model = bind("edges + offset(concurrent)", net)
        with pytest.raises(DataError):
            dyad_independent_loglik(net, model, offset_coefs=[-math.inf])


class TestBridge:
    def test_equal_endpoints_zero(self):
        net = five_node_net(5)
        model = bind("edges + triangle", net)
        theta = np.array([0.2, -0.1])
        res = bridge_loglik(net, model, theta, theta, BridgePlan(J=4, K=50))
        assert res.delta_loglik == 0.0
        assert res.mc_se == 0.0

    def test_edges_only_closed_form(self):
        net = five_node_net(6)
        model = bind("edges", net)
        theta_hat = np.array([0.8])
        theta_tilde = np.array([-0.3])
        N = net.dyad_count()
        want = (theta_hat[0] - theta_tilde[0]) * net.edge_count \
            - N * (np.logaddexp(0, theta_hat[0]) - np.logaddexp(0, theta_tilde[0]))
        plan = BridgePlan(J=8, K=20_000, interval=5, seed=7)
        res = bridge_loglik(net, model, theta_hat, theta_tilde, plan)
        assert abs(res.delta_loglik - want) < 0.02

    def test_exact_enumeration_oracle(self):
        net = five_node_net(8)
        theta_hat = (-0.4, 0.25)
        theta_tilde = (0.1, 0.0)
        want = exact_loglik(5, "edges + triangle", theta_hat, net) \
            - exact_loglik(5, "edges + triangle", theta_tilde, net)
        model = bind("edges + triangle", net)
        plan = BridgePlan(J=16, K=10_000, interval=5, seed=9)
        res = bridge_loglik(net, model, np.array(theta_hat),
                            np.array(theta_tilde), plan)
        assert abs(res.delta_loglik - want) < 0.05

    def test_antisymmetry(self):
        net = five_node_net(10)
        model = bind("edges + triangle", net)
        a = np.array([0.4, -0.2])
        b = np.array([-0.2, 0.1])
        plan1 = BridgePlan(J=8, K=4000, interval=5, seed=11)
        plan2 = BridgePlan(J=8, K=4000, interval=5, seed=12)
        fwd = bridge_loglik(net, model, a, b, plan1)
        rev = bridge_loglik(net, model, b, a, plan2)
        tol = 3.0 * math.hypot(fwd.mc_se, rev.mc_se)
        assert abs(fwd.delta_loglik + rev.delta_loglik) < max(tol, 1e-3)

    def test_path_additivity(self):
        net = five_node_net(13)
        model = bind("edges + triangle", net)
        a = np.array([-0.5, 0.3])
        mid = np.array([0.0, 0.1])
        b = np.array([0.5, -0.1])
        plans = [BridgePlan(J=8, K=4000, interval=5, seed=s) for s in (14, 15, 16)]
        direct = bridge_loglik(net, model, b, a, plans[0])
        leg1 = bridge_loglik(net, model, mid, a, plans[1])
        leg2 = bridge_loglik(net, model, b, mid, plans[2])
        tol = 3.0 * math.sqrt(direct.mc_se ** 2 + leg1.mc_se ** 2 + leg2.mc_se ** 2)
        assert abs(direct.delta_loglik - (leg1.delta_loglik + leg2.delta_loglik)) \
            < max(tol, 2e-3)


class TestAdaptive:
    def test_kronecker_first_shift_zero(self):
        assert kronecker_shift(1) == 0.0
        shifts = [kronecker_shift(l) for l in range(1, 20)]
        assert all(-0.5 <= v < 0.5 for v in shifts)

    def test_pass_one_weights_uniform(self):
        us = [(j - 0.5) / 8 for j in range(1, 9)]
        w = voronoi_weights(us)
        assert np.allclose(w, 1 / 8)

    def test_weights_positive_sum_one(self):
        rng = np.random.default_rng(17)
        us = rng.uniform(0.01, 0.99, size=37)
        w = voronoi_weights(us)
        assert (w > 0).all()
        assert abs(w.sum() - 1.0) < 1e-12

    def test_converges_to_exact(self):
        net = five_node_net(18)
        theta_hat = (-0.4, 0.25)
        theta_tilde = (0.1, 0.0)
        want = exact_loglik(5, "edges + triangle", theta_hat, net) \
            - exact_loglik(5, "edges + triangle", theta_tilde, net)
        model = bind("edges + triangle", net)
        plan = BridgePlan(interval=5, seed=19)
        res = adaptive_bridge(net, model, np.array(theta_hat),
                              np.array(theta_tilde), target_se=0.01,
                              J=8, K=2000, plan=plan)
        assert res.mc_se <= 0.01
        assert abs(res.delta_loglik - want) < max(3 * res.mc_se, 0.03)

    def test_pass_cap_flags(self):
        net = five_node_net(20)
        model = bind("edges", net)
        plan = BridgePlan(interval=3, seed=21, max_passes=2)
        res = adaptive_bridge(net, model, np.array([0.5]), np.array([0.0]),
                              target_se=1e-9, J=4, K=200, plan=plan)
        assert not res.converged
        assert res.passes == 2


class TestEvaluate:
    def test_full_report(self):
        net = five_node_net(22)
        model = bind("edges + triangle", net)
        theta_hat = np.array([-0.4, 0.25])
        want_hat = exact_loglik(5, "edges + triangle", tuple(theta_hat), net)
        plan = BridgePlan(J=12, K=4000, interval=5, seed=23)
        res = evaluate_loglik(net, model, theta_hat, plan=plan)
        assert abs(res.loglik - want_hat) < 0.05
        assert abs(res.null_deviance - null_deviance(10)) < 1e-12
        assert abs(res.aic - (-2 * res.loglik + 4)) < 1e-12
        assert abs(res.bic - (-2 * res.loglik + 2 * math.log(10))) < 1e-12
