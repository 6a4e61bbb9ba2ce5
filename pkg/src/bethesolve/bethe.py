"""The Bethe objective, its exact gradient, and the per-edge solve.

Parameterization: y_v = tau_v(1) per node and y_{u,v} = tau_{u,v}(1,1) per
edge.  The remaining entries of each pairwise table follow from
marginalization:

    A = tau(0,0) = 1 - y_u - y_v + y_{u,v}
    B = tau(1,0) = y_u - y_{u,v}
    C = tau(0,1) = y_v - y_{u,v}
    D = tau(1,1) = y_{u,v}

The objective F(y) maximized here is log-partition-shaped: on trees its
stationary value equals ln Z exactly.  All four table entries must stay
strictly positive (the polytope interior); outside it the logarithms are
undefined and MarginalOutOfPolytope is raised.

The reduced objective F*(y_V) fixes every edge variable at the root of the
per-edge stationarity condition

    e^PSI(u,v) * B/A * C/D = 1,  with  y_{u,v} in (max(0, y_u+y_v-1), min(y_u, y_v)),

which always exists and is unique.  Because the edge gradient vanishes at
that root, the gradient of F* is just the node gradient of F evaluated
there (an envelope identity), which is what grad_f_star computes.
"""
from __future__ import annotations

import math

import numpy as np

from .bp import MessageSet
from .errors import MarginalOutOfPolytope
from .models import Edge, Model

NodeMarginalVector = np.ndarray          # shape (n,), entries in (0,1)
EdgeMarginalMap = dict[Edge, float]      # canonical (u<v) -> y_{u,v}


def check_interior(y_V) -> np.ndarray:
    """Validate y_V in (0,1)^n and return it as a float array."""
    y = np.asarray(y_V, dtype=float)
    if y.ndim != 1:
        raise ValueError("y_V must be a flat vector, one entry per node")
    if not np.all(np.isfinite(y)) or np.any(y <= 0.0) or np.any(y >= 1.0):
        raise MarginalOutOfPolytope("node marginals must lie strictly in (0,1)")
    return y


def _table_entries(y_u: float, y_v: float, y_uv: float) -> tuple[float, float, float, float]:
    """(A, B, C, D); raises unless all are strictly positive."""
    a = ((1.0 - y_u) - y_v) + y_uv
    b = y_u - y_uv
    c = y_v - y_uv
    d = y_uv
    if not (a > 0.0 and b > 0.0 and c > 0.0 and d > 0.0):
        raise MarginalOutOfPolytope(
            f"edge value {y_uv} outside the open interval "
            f"({max(0.0, y_u + y_v - 1.0)}, {min(y_u, y_v)})")
    return a, b, c, d


def _xlogx(t: float) -> float:
    # 0 * ln 0 = 0 convention, for entries that underflow to exactly zero
    return 0.0 if t == 0.0 else t * math.log(t)


def bethe_free_energy(model: Model, y_V, y_E: EdgeMarginalMap) -> float:
    """F(y): node entropy/energy plus edge correction terms.

    F = sum_v [ y_v ln psi_v(1) + (1-y_v) ln psi_v(0) - y_v ln y_v
                - (1-y_v) ln(1-y_v) ]
      + sum_e [ sum_{a,b} tau(a,b) (ln psi(a,b) - ln(tau(a,b)/(tau_u(a) tau_v(b)))) ].
    """
    y = check_interior(y_V)
    total = 0.0
    for v in range(model.graph.node_count):
        p0, p1 = model.node_potential[v]
        yv = y[v]
        total += yv * math.log(p1) + (1.0 - yv) * math.log(p0)
        total -= _xlogx(yv) + _xlogx(1.0 - yv)
    for e in model.graph.edges:
        u, v = e
        t = model.edge_potential[e]
        yu, yv = y[u], y[v]
        a, b, c, d = _table_entries(yu, yv, float(y_E[e]))
        total += (a * math.log(t[0, 0]) + c * math.log(t[0, 1])
                  + b * math.log(t[1, 0]) + d * math.log(t[1, 1]))
        total -= _xlogx(a) - a * math.log((1.0 - yu) * (1.0 - yv))
        total -= _xlogx(b) - b * math.log(yu * (1.0 - yv))
        total -= _xlogx(c) - c * math.log((1.0 - yu) * yv)
        total -= _xlogx(d) - d * math.log(yu * yv)
    return total


def grad_node(model: Model, y_V, y_E: EdgeMarginalMap, v: int) -> float:
    """dF/dy_v = PSI(v) + ln((1-y_v)/y_v) + sum_u ln(A/(1-y_v) * y_v/C)."""
    y = check_interior(y_V)
    yv = y[v]
    g = model.psi_node_const[v] + math.log((1.0 - yv) / yv)
    for u in model.graph.neighbors[v]:
        e = (min(u, v), max(u, v))
        a, _, _, _ = _table_entries(y[e[0]], y[e[1]], float(y_E[e]))
        c_side = yv - float(y_E[e])
        g += math.log(a / (1.0 - yv) * (yv / c_side))
    return g


def grad_edge(model: Model, y_V, y_E: EdgeMarginalMap, edge: Edge) -> float:
    """dF/dy_{u,v} = PSI(u,v) + ln(B/A * C/D)."""
    y = check_interior(y_V)
    e = (min(edge), max(edge))
    a, b, c, d = _table_entries(y[e[0]], y[e[1]], float(y_E[e]))
    return model.edge_const(*e) + math.log(b / a * (c / d))


def pairwise_root(alpha: float, y_u: float, y_v: float) -> float:
    """Root of the per-edge stationarity condition on the unit scale.

    Solves alpha * (y_u - y)(y_v - y) = (1 - y_u - y_v + y) * y for the
    unique y strictly inside (max(0, y_u + y_v - 1), min(y_u, y_v)).
    Expanded, the quadratic is

        (alpha - 1) y^2 - [(alpha - 1)(y_u + y_v) + 1] y + alpha y_u y_v = 0.

    alpha = 1 is the exact independence case y = y_u y_v.  Otherwise the
    larger-magnitude root comes from the sign-stable quadratic formula, the
    other via Vieta, the in-interval one is selected, and a short Newton
    polish on the log form of the condition squeezes the residual toward
    the limit float64 spacing allows.
    """
    lo = max(0.0, y_u + y_v - 1.0)
    hi = min(y_u, y_v)
    if alpha == 1.0:
        return y_u * y_v

    qa = alpha - 1.0
    qb = -(qa * (y_u + y_v) + 1.0)
    qc = alpha * y_u * y_v
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        disc = 0.0
    big = -(qb + math.copysign(math.sqrt(disc), qb)) / 2.0
    roots = (big / qa, qc / big)
    inside = [r for r in roots if lo < r < hi]
    if len(inside) == 1:
        y = inside[0]
    else:
        # rounding pushed the root onto (or just past) an endpoint; take the
        # root nearer the interval and pull it strictly inside
        y = min(roots, key=lambda r: max(lo - r, r - hi, 0.0))
        y = min(max(y, math.nextafter(lo, hi)), math.nextafter(hi, lo))

    log_alpha = math.log(alpha)

    def residual(t: float) -> float:
        a = ((1.0 - y_u) - y_v) + t
        b = y_u - t
        c = y_v - t
        if not (a > 0.0 and b > 0.0 and c > 0.0 and t > 0.0):
            return math.inf
        return log_alpha + math.log(b) + math.log(c) - math.log(a) - math.log(t)

    h = residual(y)
    for _ in range(4):
        if not math.isfinite(h) or abs(h) <= 1e-15:
            break
        a = ((1.0 - y_u) - y_v) + y
        b = y_u - y
        c = y_v - y
        slope = -(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / y)
        step = h / slope
        candidate = y - step
        if not (lo < candidate < hi):
            candidate = 0.5 * (y + (hi if step < 0.0 else lo))
        h_new = residual(candidate)
        if abs(h_new) >= abs(h):
            break
        y, h = candidate, h_new

    if abs(h) > 1e-13:
        # the true root sits between adjacent floats; check both neighbors
        for candidate in (math.nextafter(y, lo), math.nextafter(y, hi)):
            h_new = residual(candidate)
            if abs(h_new) < abs(h):
                y, h = candidate, h_new
    return y


def solve_pairwise(model: Model, edge: Edge, y_u: float, y_v: float) -> float:
    """The edge variable y_{u,v} induced by node values (y_u, y_v).

    `y_u` belongs to the smaller-id endpoint of the edge; the condition is
    symmetric in (u, v) so orientation only labels the arguments.
    """
    if not (0.0 < y_u < 1.0 and 0.0 < y_v < 1.0):
        raise MarginalOutOfPolytope("solve_pairwise needs y_u, y_v in (0,1)")
    alpha = math.exp(model.edge_const(*edge))
    return pairwise_root(alpha, y_u, y_v)


def solve_all_pairwise(model: Model, y_V) -> EdgeMarginalMap:
    """Edge map with every edge at its solved value."""
    y = check_interior(y_V)
    return {e: solve_pairwise(model, e, y[e[0]], y[e[1]])
            for e in model.graph.edges}


def f_star(model: Model, y_V) -> float:
    """F evaluated with every edge variable at its solved value."""
    y = check_interior(y_V)
    return bethe_free_energy(model, y, solve_all_pairwise(model, y))


def grad_f_star(model: Model, y_V) -> np.ndarray:
    """Gradient of F*; node gradient of F at the solved edge values."""
    y = check_interior(y_V)
    n = model.graph.node_count
    g = np.empty(n)
    for v in range(n):
        g[v] = model.psi_node_const[v] + math.log((1.0 - y[v]) / y[v])
    alphas = {e: math.exp(c) for e, c in model.psi_edge_const.items()}
    for e in model.graph.edges:
        u, v = e
        yu, yv = y[u], y[v]
        y_uv = pairwise_root(alphas[e], yu, yv)
        a = ((1.0 - yu) - yv) + y_uv
        g[u] += math.log(a / (1.0 - yu) * (yu / (yu - y_uv)))
        g[v] += math.log(a / (1.0 - yv) * (yv / (yv - y_uv)))
    return g


def messages_from_y(model: Model, y_V, y_E: EdgeMarginalMap) -> MessageSet:
    """Reduced messages from marginal parameters.

    m_{u->v} = psi_{u,v}(0,1)/psi_{u,v}(0,0)
             * (1 - y_v - y_u + y_{u,v})/(1 - y_v) * y_v/(y_v - y_{u,v}).

    At a point where the full gradient of F has infinity-norm <= eps, the
    resulting message set is a 6*eps-approximate fixed point.
    """
    y = check_interior(y_V)
    messages: MessageSet = {}
    for e in model.graph.edges:
        y_uv = float(y_E[e])
        a, b, c, _ = _table_entries(y[e[0]], y[e[1]], y_uv)
        for (u, v), v_side in (((e[0], e[1]), c), ((e[1], e[0]), b)):
            t = model.edge_table(u, v)
            messages[(u, v)] = (t[0, 1] / t[0, 0]
                                * (a / (1.0 - y[v])) * (y[v] / v_side))
    return messages
