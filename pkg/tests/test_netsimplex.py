import numpy as np
import pytest

from gridot import (
    FlowNetwork,
    GridShape,
    INFEASIBLE,
    IntegerHistogram,
    OPTIMAL,
    build_bipartite,
    build_multipartite,
    power_cost,
    solve,
    ssp_solve,
)
from gridot.errors import GridotError
from gridot.netsimplex import SpanningTreeState, default_block_size, pivot_block_search

from conftest import random_integer_pair


def sparse_net(n, tails, heads, costs, supplies):
    return FlowNetwork(
        n,
        np.asarray(tails, np.int32),
        np.asarray(heads, np.int32),
        np.asarray(costs, np.int64),
        np.asarray(supplies, np.int64),
        "sparse",
        GridShape((n,)),
    )


def planted_instance(rng, n, m):
    """Random balanced instance that is feasible by construction."""
    tails = rng.integers(0, n, size=m)
    heads = rng.integers(0, n, size=m)
    costs = rng.integers(0, 25, size=m)
    planted = rng.integers(0, 5, size=m)
    supplies = np.zeros(n, np.int64)
    np.add.at(supplies, tails, planted)
    np.subtract.at(supplies, heads, planted)
    return sparse_net(n, tails, heads, costs, supplies)


def check_certificates(net, sol):
    """External optimality check from the returned flows and potentials."""
    assert sol.status == OPTIMAL
    flows = sol.flows
    pi = sol.potentials
    rc = net.costs + pi[net.tails] - pi[net.heads]
    assert rc.min() >= 0, "dual feasibility violated"
    assert not np.any(rc[flows > 0] != 0), "complementary slackness violated"
    balance = np.zeros(net.node_count, np.int64)
    np.add.at(balance, net.tails, flows)
    np.subtract.at(balance, net.heads, flows)
    np.testing.assert_array_equal(balance, net.supplies)
    assert sol.objective == sum(int(c) * int(f) for c, f in zip(net.costs, flows))


class TestTinyInstances:
    def test_single_arc(self):
        net = sparse_net(2, [0], [1], [5], [1, -1])
        sol = solve(net)
        assert sol.status == OPTIMAL
        assert sol.objective == 5
        assert list(sol.flows) == [1]

    def test_bipartite_diagonal_move(self):
        shape = GridShape((2, 2))
        mu = IntegerHistogram(shape, np.array([1, 0, 0, 0]))
        nu = IntegerHistogram(shape, np.array([0, 0, 0, 1]))
        sol = solve(build_bipartite(mu, nu, power_cost(shape, 2)))
        assert sol.objective == 2

    def test_zero_supplies(self):
        net = sparse_net(3, [0, 1], [1, 2], [4, 4], [0, 0, 0])
        sol = solve(net)
        assert sol.status == OPTIMAL
        assert sol.objective == 0
        assert not sol.flows.any()

    def test_identical_histograms(self):
        shape = GridShape((3, 3))
        mu, _ = random_integer_pair(shape, 40, np.random.default_rng(1))
        for build in (build_bipartite, build_multipartite):
            sol = solve(build(mu, mu, power_cost(shape, 2)))
            assert sol.objective == 0

    def test_parallel_arcs_pick_cheaper(self):
        net = sparse_net(2, [0, 0], [1, 1], [9, 3], [2, -2])
        sol = solve(net)
        assert sol.objective == 6
        assert list(sol.flows) == [0, 2]


class TestAgainstOracle:
    def test_hundred_random_sparse_instances(self, warm_jit):
        rng = np.random.default_rng(7)
        for _ in range(100):
            net = planted_instance(rng, 8, 20)
            sol = solve(net)
            assert sol.status == OPTIMAL
            assert sol.objective == ssp_solve(net).objective
            check_certificates(net, sol)

    def test_wider_size_range(self, warm_jit):
        rng = np.random.default_rng(8)
        for _ in range(30):
            n = int(rng.integers(8, 31))
            m = int(rng.integers(n, 4 * n))
            net = planted_instance(rng, n, m)
            sol = solve(net)
            assert sol.objective == ssp_solve(net).objective

    def test_builder_instances(self, warm_jit):
        rng = np.random.default_rng(9)
        for dims in [(8, 8), (4, 4, 4), (2, 3, 4), (64,)]:
            shape = GridShape(dims)
            for p in (1, 2):
                mu, nu = random_integer_pair(shape, 300, rng)
                cost = power_cost(shape, p)
                bip = build_bipartite(mu, nu, cost)
                mult = build_multipartite(mu, nu, cost)
                ref = ssp_solve(bip).objective
                for net in (bip, mult):
                    sol = solve(net)
                    assert sol.objective == ref
                    check_certificates(net, sol)


class TestInfeasibility:
    def test_disconnected_balanced(self):
        net = sparse_net(2, np.empty(0), np.empty(0), np.empty(0), [1, -1])
        sol = solve(net)
        assert sol.status == INFEASIBLE
        assert sol.objective is None

    def test_wrong_direction_arc(self):
        # only arc points away from the deficit node
        net = sparse_net(2, [1], [0], [1], [1, -1])
        assert solve(net).status == INFEASIBLE


class TestBlockPricing:
    def make_state(self, n_real_arcs, costs=None):
        tails = list(range(n_real_arcs))
        heads = [(i + 1) % (n_real_arcs) if n_real_arcs > 1 else 0 for i in tails]
        if n_real_arcs == 1:
            tails, heads = [0], [1]
        n = max(max(tails), max(heads)) + 1
        supplies = np.zeros(n, np.int64)
        net = sparse_net(n, tails, heads, costs or [1] * n_real_arcs, supplies)
        return SpanningTreeState.initial(net)

    def set_rc(self, state, arc_rcs):
        # zero potentials, then encode each desired reduced cost in the cost array
        state.potential[:] = 0
        costs = state.cost.copy()
        for a, rc in enumerate(arc_rcs):
            costs[a] = rc
        state.cost = costs

    def test_all_nonnegative_returns_none(self):
        state = self.make_state(6)
        self.set_rc(state, [0, 1, 2, 3, 4, 5])
        assert pivot_block_search(state, 2) is None

    def test_single_negative_found_regardless_of_position(self):
        for pos in range(6):
            for block in (1, 2, 3, 6):
                state = self.make_state(6)
                rcs = [5, 5, 5, 5, 5, 5]
                rcs[pos] = -1
                self.set_rc(state, rcs)
                assert pivot_block_search(state, block) == pos

    def test_most_negative_within_block(self):
        state = self.make_state(6)
        self.set_rc(state, [-1, -3, 5, 5, 5, 5])
        assert pivot_block_search(state, 6) == 1

    def test_first_block_with_negative_wins(self):
        # -1 sits in the first block, -9 in a later one; block search stops early
        state = self.make_state(6)
        self.set_rc(state, [-1, 5, 5, 5, 5, -9])
        assert pivot_block_search(state, 2) == 0

    def test_search_resumes_after_last_stop(self):
        state = self.make_state(6)
        self.set_rc(state, [-2, 5, 5, -4, 5, 5])
        assert pivot_block_search(state, 2) == 0
        # next search starts one past the previous winner and wraps
        assert pivot_block_search(state, 2) == 3
        assert pivot_block_search(state, 2) == 0

    def test_invalid_block_size(self):
        state = self.make_state(3)
        with pytest.raises(GridotError):
            pivot_block_search(state, 0)

    def test_default_block_size(self):
        assert default_block_size(1) == 1
        assert default_block_size(16) == 4
        assert default_block_size(17) == 5
        assert default_block_size(4194304) == 2048


class TestSolveDetails:
    def test_block_size_does_not_change_objective(self, warm_jit):
        shape = GridShape((5, 5))
        mu, nu = random_integer_pair(shape, 200, np.random.default_rng(3))
        net = build_multipartite(mu, nu, power_cost(shape, 2))
        objectives = {solve(net, block_size=b).objective for b in (1, 7, 64, None)}
        assert len(objectives) == 1

    def test_stats_populated(self):
        shape = GridShape((4, 4))
        mu, nu = random_integer_pair(shape, 100, np.random.default_rng(4))
        net = build_bipartite(mu, nu, power_cost(shape, 2))
        sol = solve(net)
        assert sol.stats.pivots > 0
        assert sol.stats.runtime_s >= 0
        assert sol.stats.node_count == net.node_count
        assert sol.stats.arc_count == net.arc_count
        assert sol.stats.block_size == default_block_size(net.arc_count)

    def test_flows_match_marginals(self):
        shape = GridShape((3, 3))
        mu, nu = random_integer_pair(shape, 60, np.random.default_rng(5))
        net = build_bipartite(mu, nu, power_cost(shape, 1))
        sol = solve(net)
        n = shape.nbins
        out = np.zeros(n, np.int64)
        np.add.at(out, net.tails, sol.flows)
        np.testing.assert_array_equal(out, mu.mass)
        inc = np.zeros(n, np.int64)
        np.add.at(inc, net.heads - n, sol.flows)
        np.testing.assert_array_equal(inc, nu.mass)

    def test_big_cost_big_supply(self):
        # near the dual guard: large costs with large supplies still solve exactly
        c = 10**6
        t = 10**9
        net = sparse_net(3, [0, 0, 1], [1, 2, 2], [c, 3 * c, c], [t, 0, -t])
        sol = solve(net)
        assert sol.objective == 2 * c * t
