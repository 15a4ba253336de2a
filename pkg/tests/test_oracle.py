import numpy as np
import pytest

from gridot import (
    FlowNetwork,
    GridShape,
    InfeasibleError,
    IntegerHistogram,
    TooLargeError,
    UnbalancedTotalsError,
    build_bipartite,
    build_multipartite,
    enumerate_tiny,
    ground_cost,
    power_cost,
    solve,
    ssp_solve,
)

from conftest import random_integer_pair
from test_netsimplex import planted_instance, sparse_net


class TestSSP:
    def test_single_arc(self):
        net = sparse_net(2, [0], [1], [5], [1, -1])
        res = ssp_solve(net)
        assert res.objective == solve(net).objective == 5
        assert res.method == "ssp"

    def test_builder_instances_up_to_64_bins(self, warm_jit):
        rng = np.random.default_rng(20)
        for dims in [(2, 2), (3, 3), (8, 8), (4, 4, 4), (2, 2, 2, 2), (64,)]:
            shape = GridShape(dims)
            mu, nu = random_integer_pair(shape, 150, rng)
            for p in (1, 2, 3):
                cost = power_cost(shape, p)
                for build in (build_bipartite, build_multipartite):
                    net = build(mu, nu, cost)
                    assert ssp_solve(net).objective == solve(net).objective

    def test_random_sparse_graphs(self, warm_jit):
        rng = np.random.default_rng(21)
        for _ in range(40):
            n = int(rng.integers(8, 31))
            net = planted_instance(rng, n, int(rng.integers(n, 3 * n)))
            assert ssp_solve(net).objective == solve(net).objective

    def test_infeasible_raises(self):
        net = sparse_net(2, np.empty(0), np.empty(0), np.empty(0), [1, -1])
        with pytest.raises(InfeasibleError):
            ssp_solve(net)

    def test_rejects_negative_costs(self):
        tails = np.array([0], np.int32)
        heads = np.array([1], np.int32)
        supplies = np.array([1, -1], np.int64)
        net = FlowNetwork.__new__(FlowNetwork)
        # bypass builder validation to hit the solver's own check
        object.__setattr__(net, "node_count", 2)
        object.__setattr__(net, "tails", tails)
        object.__setattr__(net, "heads", heads)
        object.__setattr__(net, "costs", np.array([-1], np.int64))
        object.__setattr__(net, "supplies", supplies)
        object.__setattr__(net, "kind", "sparse")
        object.__setattr__(net, "shape", GridShape((2,)))
        object.__setattr__(net, "layer_arc_offsets", None)
        with pytest.raises(Exception):
            ssp_solve(net)


class TestEnumerateTiny:
    def test_total_one_is_single_move(self):
        shape = GridShape((2, 2))
        cost = power_cost(shape, 2)
        for x in range(4):
            for y in range(4):
                mu_mass = np.zeros(4, np.int64)
                nu_mass = np.zeros(4, np.int64)
                mu_mass[x] = 1
                nu_mass[y] = 1
                mu = IntegerHistogram(shape, mu_mass)
                nu = IntegerHistogram(shape, nu_mass)
                expect = ground_cost(cost, shape.unravel(x), shape.unravel(y))
                assert enumerate_tiny(mu, nu, cost).objective == expect

    def test_forced_two_unit_move(self):
        shape = GridShape((2,))
        mu = IntegerHistogram(shape, np.array([2, 0]))
        nu = IntegerHistogram(shape, np.array([0, 2]))
        assert enumerate_tiny(mu, nu, power_cost(shape, 2)).objective == 2

    def test_random_total_four_agrees_with_solvers(self, warm_jit):
        rng = np.random.default_rng(22)
        shape = GridShape((4,))
        cost = power_cost(shape, 2)
        for _ in range(30):
            mu = IntegerHistogram(shape, rng.multinomial(4, [0.25] * 4))
            nu = IntegerHistogram(shape, rng.multinomial(4, [0.25] * 4))
            ref = enumerate_tiny(mu, nu, cost).objective
            bip = build_bipartite(mu, nu, cost)
            assert ref == solve(bip).objective
            assert ref == ssp_solve(bip).objective
            assert ref == solve(build_multipartite(mu, nu, cost)).objective

    def test_two_d_tiny(self, warm_jit):
        rng = np.random.default_rng(23)
        shape = GridShape((2, 2))
        cost = power_cost(shape, 1)
        for _ in range(20):
            mu = IntegerHistogram(shape, rng.multinomial(5, [0.25] * 4))
            nu = IntegerHistogram(shape, rng.multinomial(5, [0.25] * 4))
            ref = enumerate_tiny(mu, nu, cost).objective
            assert ref == solve(build_bipartite(mu, nu, cost)).objective

    def test_too_large_limits(self):
        shape = GridShape((4,))
        big_total = IntegerHistogram(shape, np.array([7, 0, 0, 0]))
        other = IntegerHistogram(shape, np.array([0, 7, 0, 0]))
        with pytest.raises(TooLargeError):
            enumerate_tiny(big_total, other, power_cost(shape, 2))
        wide = GridShape((5,))
        mu = IntegerHistogram(wide, np.array([1, 0, 0, 0, 0]))
        nu = IntegerHistogram(wide, np.array([0, 1, 0, 0, 0]))
        with pytest.raises(TooLargeError):
            enumerate_tiny(mu, nu, power_cost(wide, 2))

    def test_unbalanced(self):
        shape = GridShape((2,))
        mu = IntegerHistogram(shape, np.array([2, 0]))
        nu = IntegerHistogram(shape, np.array([1, 0]))
        with pytest.raises(UnbalancedTotalsError):
            enumerate_tiny(mu, nu, power_cost(shape, 2))
