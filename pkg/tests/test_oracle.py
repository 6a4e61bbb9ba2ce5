"""Exact enumeration oracle: hand values, transfer-matrix cross-checks."""
import math

import numpy as np
import pytest

from bethesolve import Graph, ZeroAllowedModel, build_categorical, \
    build_model, exact_categorical, exact_marginals, exact_partition, \
    make_path_graph, make_random_model, tree_conditional_check
from bethesolve.errors import NotATree, TooLargeForEnumeration, UnknownEdge


def path_transfer_log_z(node_pot, edge_tables):
    """ln Z of a path model by transfer matrices (independent oracle)."""
    vec = np.asarray(node_pot[0], dtype=float)
    shift = 0.0
    for v in range(1, len(node_pot)):
        vec = vec @ np.asarray(edge_tables[v - 1], dtype=float)
        vec = vec * np.asarray(node_pot[v], dtype=float)
        s = float(vec.max())
        vec /= s
        shift += math.log(s)
    return shift + math.log(float(vec.sum()))


class TestExactPartition:
    def test_two_node_hand_value(self):
        g = Graph(node_count=2, edges=((0, 1),))
        m = build_model(g, [(1.0, 2.0), (3.0, 4.0)],
                        {(0, 1): [[5.0, 6.0], [7.0, 8.0]]})
        # sum over (x0, x1): 1*3*5 + 1*4*6 + 2*3*7 + 2*4*8
        z = 15 + 24 + 42 + 64
        np.testing.assert_allclose(exact_partition(m), math.log(z),
                                   rtol=1e-14)

    def test_independent_nodes_factorize(self):
        g = Graph(node_count=3, edges=())
        m = build_model(g, [(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)], {})
        np.testing.assert_allclose(exact_partition(m),
                                   math.log(3) + math.log(4) + math.log(5),
                                   rtol=1e-14)

    def test_path_matches_transfer_matrix_across_chunks(self):
        # 18 nodes -> 2**18 configurations, several enumeration chunks
        n = 18
        g = make_path_graph(n)
        rng = np.random.default_rng(0)
        node_pot = rng.uniform(0.5, 2.0, (n, 2))
        tables = [rng.uniform(0.5, 2.0, (2, 2)) for _ in range(n - 1)]
        m = build_model(g, node_pot, {e: t for e, t in zip(g.edges, tables)})
        expected = path_transfer_log_z(node_pot, tables)
        np.testing.assert_allclose(exact_partition(m), expected, rtol=1e-12)

    def test_renormalization_handles_huge_weights(self):
        n = 12
        g = make_path_graph(n)
        node_pot = np.full((n, 2), 1e8)
        tables = [np.full((2, 2), 1e8) for _ in range(n - 1)]
        m = ZeroAllowedModel(graph=g, node_potential=node_pot,
                             edge_potential={e: t for e, t
                                             in zip(g.edges, tables)})
        # every configuration weighs (1e8)**(n + n - 1); 2**n of them
        expected = (2 * n - 1) * math.log(1e8) + n * math.log(2)
        np.testing.assert_allclose(exact_partition(m), expected, rtol=1e-12)

    def test_size_guard(self):
        g = make_path_graph(26)
        m = make_random_model(g, seed=0)
        with pytest.raises(TooLargeForEnumeration):
            exact_partition(m)


class TestExactMarginals:
    def test_marginals_are_consistent(self):
        m = make_random_model(make_path_graph(5), seed=3)
        res = exact_marginals(m)
        assert np.all((res.node_marginals > 0) & (res.node_marginals < 1))
        for (u, v), joint in res.edge_marginals.items():
            np.testing.assert_allclose(joint.sum(), 1.0, rtol=1e-12)
            np.testing.assert_allclose(joint[1].sum(), res.node_marginals[u],
                                       rtol=1e-12)
            np.testing.assert_allclose(joint[:, 1].sum(),
                                       res.node_marginals[v], rtol=1e-12)

    def test_two_node_hand_marginal(self):
        g = Graph(node_count=2, edges=((0, 1),))
        m = build_model(g, [(1.0, 2.0), (3.0, 4.0)],
                        {(0, 1): [[5.0, 6.0], [7.0, 8.0]]})
        z = 15 + 24 + 42 + 64
        np.testing.assert_allclose(exact_marginals(m).node_marginals[0],
                                   (42 + 64) / z, rtol=1e-14)

    def test_zero_allowed_hardcore_edge(self):
        # exact hard-core (psi(1,1) = 0) on a single edge, fugacity 1:
        # allowed configurations 00, 01, 10 -> Z = 3, P(x0 = 1) = 1/3
        g = Graph(node_count=2, edges=((0, 1),))
        m = ZeroAllowedModel(graph=g, node_potential=np.ones((2, 2)),
                             edge_potential={(0, 1):
                                             np.array([[1.0, 1.0],
                                                       [1.0, 0.0]])})
        np.testing.assert_allclose(exact_partition(m), math.log(3),
                                   rtol=1e-14)
        np.testing.assert_allclose(exact_marginals(m).node_marginals,
                                   [1 / 3, 1 / 3], rtol=1e-14)

    def test_categorical_required_for_wide_alphabets(self):
        rng = np.random.default_rng(1)
        g = make_path_graph(3)
        cm = build_categorical(g, rng.uniform(0.5, 2.0, (3, 3)),
                               [rng.uniform(0.5, 2.0, (3, 3))
                                for _ in range(2)])
        with pytest.raises(ValueError, match="binary"):
            exact_marginals(cm)
        res = exact_categorical(cm)
        np.testing.assert_allclose(res.node_marginals.sum(axis=1),
                                   np.ones(3), rtol=1e-12)
        for (u, v), joint in res.edge_marginals.items():
            np.testing.assert_allclose(joint.sum(axis=1),
                                       res.node_marginals[u], rtol=1e-12)
            np.testing.assert_allclose(joint.sum(axis=0),
                                       res.node_marginals[v], rtol=1e-12)


class TestTreeConditionalCheck:
    def test_single_edge_closed_form(self):
        # with no branches, the message from u is the one-step BP value
        g = Graph(node_count=2, edges=((0, 1),))
        node = [(1.0, 2.0), (1.0, 1.0)]
        table = np.array([[5.0, 6.0], [7.0, 8.0]])  # [x_0, x_1]
        m = build_model(g, node, {(0, 1): table})
        expected = (6.0 * 1.0 + 8.0 * 2.0) / (5.0 * 1.0 + 7.0 * 2.0)
        got = tree_conditional_check(m, v=1, u=0)
        np.testing.assert_allclose(got, expected, rtol=1e-12)

    def test_rejects_non_tree_and_non_edge(self):
        loop = Graph(node_count=3, edges=((0, 1), (1, 2), (0, 2)))
        m = make_random_model(loop, seed=0)
        with pytest.raises(NotATree):
            tree_conditional_check(m, 0, 1)
        path = make_random_model(make_path_graph(4), seed=0)
        with pytest.raises(UnknownEdge):
            tree_conditional_check(path, 0, 2)
