"""Categorical slice solver: conservation, binary embedding, convergence."""
import math

import numpy as np
import pytest

from bethesolve import CategoricalModel, DegenerateSlice, SolverOptions, \
    TauState, ascent_step, build_categorical, build_model, check_state, \
    exact_categorical, grad_node, make_path_graph, max_pair_gradient, \
    pair_gradient, pair_step, pairwise_root, solve_all_pairwise, \
    solve_nonbinary, uniform_state


def random_categorical(graph, q, seed, low=0.5, high=2.0):
    rng = np.random.default_rng(seed)
    node = rng.uniform(low, high, (graph.node_count, q))
    edge = {e: rng.uniform(low, high, (q, q)) for e in graph.edges}
    return build_categorical(graph, node, edge)


class TestStateBasics:
    def test_uniform_state_is_consistent(self):
        m = random_categorical(make_path_graph(4), 3, seed=0)
        state = uniform_state(m)
        check_state(m, state)
        np.testing.assert_array_equal(state.node, np.full((4, 3), 1 / 3))

    def test_check_state_rejects_bad_normalization(self):
        m = random_categorical(make_path_graph(3), 3, seed=1)
        state = uniform_state(m)
        bad = state.copy()
        bad.node[0, 0] = 0.5
        with pytest.raises(ValueError, match="normalization|marginalization"):
            check_state(m, bad)

    def test_check_state_rejects_inconsistent_edge(self):
        m = random_categorical(make_path_graph(3), 3, seed=2)
        state = uniform_state(m)
        bad = state.copy()
        bad.edge[(0, 1)][0, 0] += 0.05
        bad.edge[(0, 1)][0, 1] -= 0.05
        with pytest.raises(ValueError, match="marginalization"):
            check_state(m, bad)


class TestPairStep:
    def test_all_ones_uniform_is_stationary(self):
        # with every potential equal the uniform state is the optimum:
        # every slice gradient vanishes and a step never moves the state
        g = make_path_graph(3)
        m = build_categorical(g, np.ones((3, 3)),
                              {e: np.ones((3, 3)) for e in g.edges})
        state = uniform_state(m)
        np.testing.assert_allclose(pair_gradient(m, state, 0, 1), 0.0,
                                   atol=1e-14)
        stepped = pair_step(m, state, 0, 1, t=5, opts=SolverOptions())
        np.testing.assert_allclose(stepped.node, state.node, atol=1e-14)
        for e in g.edges:
            np.testing.assert_allclose(stepped.edge[e], state.edge[e],
                                       atol=1e-14)

    def test_update_is_local_to_the_slice(self):
        m = random_categorical(make_path_graph(4), 4, seed=3)
        state = uniform_state(m)
        p, q = 1, 3
        stepped = pair_step(m, state, p, q, t=1, opts=SolverOptions())
        keep = [x for x in range(4) if x not in (p, q)]
        np.testing.assert_array_equal(stepped.node[:, keep],
                                      state.node[:, keep])
        for e in m.graph.edges:
            before, after = state.edge[e], stepped.edge[e]
            mask = np.ones((4, 4), dtype=bool)
            mask[np.ix_([p, q], [p, q])] = False
            np.testing.assert_array_equal(after[mask], before[mask])

    def test_mass_conservation_across_many_steps(self):
        m = random_categorical(make_path_graph(4), 3, seed=4)
        state = uniform_state(m)
        pairs = [(0, 1), (0, 2), (1, 2)]
        for t in range(1, 301):
            p, q = pairs[(t - 1) % 3]
            state = pair_step(m, state, p, q, t, SolverOptions())
            assert np.max(np.abs(state.node.sum(axis=1) - 1.0)) <= 1e-9
            for e in m.graph.edges:
                assert abs(state.edge[e].sum() - 1.0) <= 1e-9
        check_state(m, state, tol=1e-8)

    def test_backfill_uses_the_pairwise_root(self):
        m = random_categorical(make_path_graph(2), 3, seed=5)
        state = uniform_state(m)
        p, q = 0, 2
        stepped = pair_step(m, state, p, q, t=2, opts=SolverOptions())
        e = (0, 1)
        block = stepped.edge[e][np.ix_([p, q], [p, q])]
        mass = float(block.sum())
        alpha = math.exp(float(m.pair_const[e][p, q]))
        m_u = float(block[0, 0] + block[0, 1])
        m_v = float(block[0, 0] + block[1, 0])
        y_pp = mass * pairwise_root(alpha, m_u / mass, m_v / mass)
        np.testing.assert_allclose(block[0, 0], y_pp, rtol=1e-10)

    def test_symbol_validation(self):
        m = random_categorical(make_path_graph(2), 3, seed=6)
        state = uniform_state(m)
        with pytest.raises(ValueError, match="differ"):
            pair_step(m, state, 1, 1, t=1, opts=SolverOptions())
        with pytest.raises(ValueError, match="symbols"):
            pair_step(m, state, 0, 3, t=1, opts=SolverOptions())

    def test_degenerate_slice_raises(self):
        # a consistent state whose (0,1) slice mass 0.05 sits below the
        # t = 1 projection floor 2 * 0.1 * width cannot host a step
        g = make_path_graph(2)
        m = build_categorical(g, np.ones((2, 3)),
                              {e: np.ones((3, 3)) for e in g.edges})
        node = np.array([[0.02, 0.03, 0.95], [0.02, 0.03, 0.95]])
        edge = {(0, 1): np.outer(node[0], node[1])}
        state = TauState(node=node, edge=edge)
        check_state(m, state)
        with pytest.raises(DegenerateSlice):
            pair_step(m, state, 0, 1, t=1, opts=SolverOptions())


class TestBinaryEmbedding:
    def binary_pair(self, seed):
        g = make_path_graph(3)
        rng = np.random.default_rng(seed)
        node = rng.uniform(0.5, 2.0, (3, 2))
        edge = {e: rng.uniform(0.5, 2.0, (2, 2)) for e in g.edges}
        binary = build_model(g, node, edge)
        categorical = build_categorical(g, node, edge)
        return binary, categorical

    def test_pair_gradient_equals_binary_node_gradient(self):
        binary, categorical = self.binary_pair(7)
        rng = np.random.default_rng(8)
        y = rng.uniform(0.2, 0.8, 3)
        y_e = solve_all_pairwise(binary, y)
        node = np.stack([1.0 - y, y], axis=1)
        # tables are [x_u, x_v]: entry (1,1) is y_uv, row 1 sums to y_u
        edge = {}
        for e, y_uv in y_e.items():
            y_u, y_v = y[e[0]], y[e[1]]
            table = np.empty((2, 2))
            table[1, 1] = y_uv
            table[1, 0] = y_u - y_uv
            table[0, 1] = y_v - y_uv
            table[0, 0] = 1.0 - y_u - y_v + y_uv
            edge[e] = table
        state = TauState(node=node, edge=edge)
        check_state(categorical, state)
        g_slice = pair_gradient(categorical, state, 1, 0)
        for v in range(3):
            np.testing.assert_allclose(
                g_slice[v], grad_node(binary, y, y_e, v), rtol=1e-10,
                atol=1e-12)

    def test_pair_step_equals_binary_ascent_step(self):
        binary, categorical = self.binary_pair(9)
        rng = np.random.default_rng(10)
        y = rng.uniform(0.3, 0.7, 3)
        y_e = solve_all_pairwise(binary, y)
        node = np.stack([1.0 - y, y], axis=1)
        edge = {}
        for e, y_uv in y_e.items():
            y_u, y_v = y[e[0]], y[e[1]]
            table = np.empty((2, 2))
            table[1, 1] = y_uv
            table[1, 0] = y_u - y_uv
            table[0, 1] = y_v - y_uv
            table[0, 0] = 1.0 - y_u - y_v + y_uv
            edge[e] = table
        state = TauState(node=node, edge=edge)
        for t in (1, 5, 50):
            stepped = pair_step(categorical, state, 1, 0, t, SolverOptions())
            expected_y = ascent_step(binary, y, t, SolverOptions())
            np.testing.assert_allclose(stepped.node[:, 1], expected_y,
                                       rtol=1e-12, atol=1e-14)
            expected_e = solve_all_pairwise(binary, expected_y)
            for e in binary.graph.edges:
                np.testing.assert_allclose(stepped.edge[e][1, 1],
                                           expected_e[e], rtol=1e-9)


class TestSolveNonbinary:
    def test_path_matches_exact_categorical(self):
        m = random_categorical(make_path_graph(3), 3, seed=11)
        state, trace, converged = solve_nonbinary(
            m, SolverOptions(epsilon=1e-4, max_iters=10000))
        assert converged
        exact = exact_categorical(m)
        np.testing.assert_allclose(state.node, exact.node_marginals,
                                   atol=1e-3)
        assert max_pair_gradient(m, state) <= 1e-4
        check_state(m, state, tol=1e-8)

    def test_triangle_runs_to_convergence(self):
        from bethesolve import Graph
        g = Graph(node_count=3, edges=((0, 1), (0, 2), (1, 2)))
        m = random_categorical(g, 3, seed=12)
        state, trace, converged = solve_nonbinary(
            m, SolverOptions(epsilon=1e-3, max_iters=10000))
        assert converged
        assert max_pair_gradient(m, state) <= 1e-3

    def test_budget_returns_flag_instead_of_raising(self):
        m = random_categorical(make_path_graph(3), 3, seed=13)
        state, trace, converged = solve_nonbinary(
            m, SolverOptions(epsilon=1e-12, max_iters=5))
        assert not converged
        assert len(trace) == 5
        check_state(m, state, tol=1e-8)

    def test_two_symbol_models_are_rejected(self):
        m = random_categorical(make_path_graph(3), 2, seed=14)
        with pytest.raises(ValueError, match="binary"):
            solve_nonbinary(m)

    def test_alphabet_validation(self):
        g = make_path_graph(2)
        with pytest.raises(ValueError, match="alphabet_size"):
            CategoricalModel(graph=g, alphabet_size=1,
                             node_potential=np.ones((2, 1)),
                             edge_potential={(0, 1): np.ones((1, 1))})
