"""Bethe objective: hand values, finite-difference oracles, pairwise solve."""
import math

import numpy as np
import pytest

from bethesolve import Graph, bethe_free_energy, build_model, f_star, \
    fixed_point_residual, grad_edge, grad_f_star, grad_node, \
    make_path_graph, make_random_model, make_random_tree, messages_from_y, \
    pairwise_root, solve_all_pairwise, solve_pairwise
from bethesolve.bethe import check_interior
from bethesolve.errors import MarginalOutOfPolytope


def random_loopy_graph(rng, n):
    edges = set()
    for v in range(1, n):
        edges.add((int(rng.integers(0, v)), v))
    for _ in range(int(rng.integers(0, n))):
        u, v = (int(x) for x in rng.integers(0, n, 2))
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return Graph(node_count=n, edges=tuple(sorted(edges)))


def interior_edge_point(rng, y_u, y_v):
    lo = max(0.0, y_u + y_v - 1.0)
    hi = min(y_u, y_v)
    return lo + (hi - lo) * rng.uniform(0.25, 0.75)


class TestFreeEnergyPoint:
    def test_uniform_point_on_all_ones_edge(self):
        # psi == 1, y_u = y_v = 1/2, y_uv = 1/4 is the exact optimum of a
        # single all-ones edge, where the objective equals ln Z = ln 4
        g = Graph(node_count=2, edges=((0, 1),))
        m = build_model(g, np.ones((2, 2)), {(0, 1): np.ones((2, 2))})
        y = np.array([0.5, 0.5])
        f = bethe_free_energy(m, y, {(0, 1): 0.25})
        np.testing.assert_allclose(f, 2 * math.log(2), atol=1e-14)

    def test_interior_validation(self):
        check_interior(np.array([0.3, 0.7]))
        with pytest.raises(MarginalOutOfPolytope):
            check_interior(np.array([0.0, 0.5]))
        with pytest.raises(MarginalOutOfPolytope):
            check_interior(np.array([0.5, 1.0]))

    def test_polytope_violation_raises(self):
        m = make_random_model(make_path_graph(2), seed=0)
        with pytest.raises(MarginalOutOfPolytope):
            bethe_free_energy(m, np.array([0.3, 0.3]), {(0, 1): 0.35})


class TestGradientsAgainstFiniteDifferences:
    def test_grad_node_matches_central_differences(self):
        rng = np.random.default_rng(10)
        for _ in range(8):
            n = int(rng.integers(3, 7))
            g = random_loopy_graph(rng, n)
            m = make_random_model(g, seed=int(rng.integers(1e6)),
                                  low=0.25, high=4.0)
            y = rng.uniform(0.2, 0.8, n)
            y_e = {e: interior_edge_point(rng, y[e[0]], y[e[1]])
                   for e in g.edges}
            h = 1e-6
            for v in range(n):
                yp, ym = y.copy(), y.copy()
                yp[v] += h
                ym[v] -= h
                fd = (bethe_free_energy(m, yp, y_e)
                      - bethe_free_energy(m, ym, y_e)) / (2 * h)
                np.testing.assert_allclose(grad_node(m, y, y_e, v), fd,
                                           rtol=1e-5, atol=1e-7)

    def test_grad_edge_matches_central_differences(self):
        rng = np.random.default_rng(11)
        for _ in range(8):
            n = int(rng.integers(3, 7))
            g = random_loopy_graph(rng, n)
            m = make_random_model(g, seed=int(rng.integers(1e6)),
                                  low=0.25, high=4.0)
            y = rng.uniform(0.2, 0.8, n)
            y_e = {e: interior_edge_point(rng, y[e[0]], y[e[1]])
                   for e in g.edges}
            for e in g.edges:
                h = 1e-7
                up, down = dict(y_e), dict(y_e)
                up[e] = y_e[e] + h
                down[e] = y_e[e] - h
                fd = (bethe_free_energy(m, y, up)
                      - bethe_free_energy(m, y, down)) / (2 * h)
                np.testing.assert_allclose(grad_edge(m, y, y_e, e), fd,
                                           rtol=1e-5, atol=1e-6)

    def test_grad_f_star_matches_central_differences(self):
        rng = np.random.default_rng(12)
        for _ in range(6):
            n = int(rng.integers(3, 7))
            g = random_loopy_graph(rng, n)
            m = make_random_model(g, seed=int(rng.integers(1e6)),
                                  low=0.25, high=4.0)
            y = rng.uniform(0.2, 0.8, n)
            grad = grad_f_star(m, y)
            h = 1e-6
            for v in range(n):
                yp, ym = y.copy(), y.copy()
                yp[v] += h
                ym[v] -= h
                fd = (f_star(m, yp) - f_star(m, ym)) / (2 * h)
                np.testing.assert_allclose(grad[v], fd, rtol=1e-5, atol=1e-7)

    def test_envelope_identity(self):
        # the gradient of the reduced objective equals the node gradient of
        # the full objective evaluated at the solved edge marginals
        rng = np.random.default_rng(13)
        for _ in range(6):
            n = int(rng.integers(3, 7))
            g = random_loopy_graph(rng, n)
            m = make_random_model(g, seed=int(rng.integers(1e6)))
            y = rng.uniform(0.15, 0.85, n)
            y_e = solve_all_pairwise(m, y)
            grad = grad_f_star(m, y)
            for v in range(n):
                np.testing.assert_allclose(grad[v], grad_node(m, y, y_e, v),
                                           rtol=1e-9, atol=1e-9)

    def test_solved_edges_zero_the_edge_gradient(self):
        rng = np.random.default_rng(14)
        m = make_random_model(make_path_graph(4), seed=3)
        y = rng.uniform(0.2, 0.8, 4)
        y_e = solve_all_pairwise(m, y)
        for e in m.graph.edges:
            assert abs(grad_edge(m, y, y_e, e)) < 1e-9


class TestPairwiseRoot:
    def test_alpha_one_is_the_product(self):
        rng = np.random.default_rng(20)
        for _ in range(50):
            y_u, y_v = rng.uniform(0.05, 0.95, 2)
            assert pairwise_root(1.0, y_u, y_v) == y_u * y_v

    def test_closed_form_symmetric_half(self):
        # alpha (1/2 - y)^2 = y^2 at y_u = y_v = 1/2 gives
        # y = sqrt(alpha) / (2 (1 + sqrt(alpha)))
        for alpha in (1e-3, 0.1, 3.0, 1e3):
            expected = math.sqrt(alpha) / (2.0 * (1.0 + math.sqrt(alpha)))
            got = pairwise_root(alpha, 0.5, 0.5)
            np.testing.assert_allclose(got, expected, rtol=1e-12)

    def test_frozen_bisection_value(self):
        # independent bisection of the log-constraint at alpha = 0.001,
        # y_u = y_v = 1/2 agrees with the closed form to full precision
        got = pairwise_root(0.001, 0.5, 0.5)
        np.testing.assert_allclose(got, 0.015326715015857752, rtol=1e-12)

    def test_matches_bisection_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            alpha = math.exp(rng.uniform(math.log(1e-4), math.log(1e4)))
            y_u, y_v = rng.uniform(0.05, 0.95, 2)
            lo = max(0.0, y_u + y_v - 1.0)
            hi = min(y_u, y_v)

            def h(y):
                return (math.log(alpha) + math.log(y_u - y)
                        + math.log(y_v - y)
                        - math.log(1.0 - y_u - y_v + y) - math.log(y))

            a = lo + 1e-15 * (hi - lo)
            b = hi - 1e-15 * (hi - lo)
            for _ in range(100):
                mid = 0.5 * (a + b)
                if h(mid) > 0.0:
                    a = mid
                else:
                    b = mid
            got = pairwise_root(alpha, y_u, y_v)
            np.testing.assert_allclose(got, 0.5 * (a + b), rtol=1e-9,
                                       atol=1e-14)

    def test_interval_containment_and_conditioned_residual(self):
        # the residual floor in double precision is |h'(y)| * ulp(y); check
        # the solver is within a small factor of it at every sample
        rng = np.random.default_rng(22)
        for _ in range(2000):
            alpha = math.exp(rng.uniform(math.log(1e-4), math.log(1e4)))
            y_u, y_v = rng.uniform(0.01, 0.99, 2)
            y = pairwise_root(alpha, y_u, y_v)
            lo = max(0.0, y_u + y_v - 1.0)
            hi = min(y_u, y_v)
            assert lo < y < hi
            a = 1.0 - y_u - y_v + y
            b = y_u - y
            c = y_v - y
            res = abs(math.log(alpha) + math.log(b) + math.log(c)
                      - math.log(a) - math.log(y))
            slope = 1.0 / a + 1.0 / b + 1.0 / c + 1.0 / y
            floor = slope * math.ulp(y)
            assert res <= max(1e-12, 4.0 * floor)

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            y_u, y_v = rng.uniform(0.1, 0.9, 2)
            alphas = np.exp(rng.uniform(-6, 6, 5))
            alphas.sort()
            roots = [pairwise_root(float(a), y_u, y_v) for a in alphas]
            assert all(r1 < r2 for r1, r2 in zip(roots, roots[1:]))

    def test_extreme_corners_stay_inside(self):
        for alpha in (1e-4, 1e4):
            for y_u in (0.01, 0.5, 0.99):
                for y_v in (0.01, 0.5, 0.99):
                    y = pairwise_root(alpha, y_u, y_v)
                    assert max(0.0, y_u + y_v - 1.0) < y < min(y_u, y_v)

    def test_solve_pairwise_validates_inputs(self):
        m = make_random_model(make_path_graph(2), seed=0)
        with pytest.raises(MarginalOutOfPolytope):
            solve_pairwise(m, (0, 1), 0.0, 0.5)
        with pytest.raises(MarginalOutOfPolytope):
            solve_pairwise(m, (0, 1), 0.5, 1.0)


class TestMessagesFromY:
    def test_messages_positive_and_complete(self):
        rng = np.random.default_rng(30)
        m = make_random_model(make_random_tree(6, seed=4), seed=7)
        y = rng.uniform(0.2, 0.8, 6)
        msgs = messages_from_y(m, y, solve_all_pairwise(m, y))
        directed = set()
        for u, v in m.graph.edges:
            directed.update([(u, v), (v, u)])
        assert set(msgs) == directed
        assert all(math.isfinite(v) and v > 0 for v in msgs.values())

    def test_near_stationary_points_give_near_fixed_points(self):
        # small-scale version of the conversion bound: residual <= 6 eps
        from bethesolve import BudgetExhausted, SolverOptions, solve
        m = make_random_model(make_random_tree(8, seed=5), seed=8)
        with pytest.raises(BudgetExhausted) as exc:
            solve(m, SolverOptions(epsilon=1e-12, max_iters=60))
        y = exc.value.result.y_V
        gnorm = float(np.max(np.abs(grad_f_star(m, y))))
        msgs = messages_from_y(m, y, solve_all_pairwise(m, y))
        assert fixed_point_residual(m, msgs) <= 6.0 * gnorm
