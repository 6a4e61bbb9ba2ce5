"""Belief propagation on reduced (ratio) messages.

A reduced message for the directed edge u -> v is the scalar
m_{u->v} = m_{u->v}(1) / m_{u->v}(0).  The sweep is fully synchronous
(Jacobi): every outgoing message at step t+1 is computed from the full
message set at step t.  Convergence is declared through the multiplicative
fixed-point residual

    max over directed edges of | m_{u->v} / f_{u->v}(prod of in-messages) - 1 |,

which is scale-meaningful: a set of messages is an eps-approximate fixed
point exactly when the residual is <= eps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericOverflow, UnknownEdge
from .models import Model
from .trace import SolveTrace

MessageSet = dict[tuple[int, int], float]

# direct multiplication is safe for short neighbor lists; beyond this,
# accumulate in log space so |psi|**degree cannot overflow
_LOG_ACCUM_DEGREE = 16


def unit_messages(model: Model) -> MessageSet:
    """The standard all-ones initialization, both directions per edge."""
    messages: MessageSet = {}
    for u, v in model.graph.edges:
        messages[(u, v)] = 1.0
        messages[(v, u)] = 1.0
    return messages


def check_messages(model: Model, messages: MessageSet) -> None:
    """Validate a message set: both directions per edge, positive, finite."""
    expected = set()
    for u, v in model.graph.edges:
        expected.add((u, v))
        expected.add((v, u))
    if set(messages) != expected:
        raise UnknownEdge("message set does not cover exactly the directed edges")
    for key, m in messages.items():
        if not (math.isfinite(m) and m > 0.0):
            raise ValueError(f"message {key} is {m!r}; must be positive finite")


def f_edge(model: Model, directed_edge: tuple[int, int], x: float) -> float:
    """The message update ratio f_{u->v}(x) for a directed edge.

    f_{u->v}(x) = [psi_{u,v}(0,1) psi_u(0) + psi_{u,v}(1,1) psi_u(1) x]
                / [psi_{u,v}(0,0) psi_u(0) + psi_{u,v}(1,0) psi_u(1) x]
    """
    u, v = directed_edge
    t = model.edge_table(u, v)
    p0, p1 = model.node_potential[u]
    num = t[0, 1] * p0 + t[1, 1] * p1 * x
    den = t[0, 0] * p0 + t[1, 0] * p1 * x
    return num / den


def _in_product(model: Model, messages: MessageSet, u: int, excluding: int) -> float:
    """Product of messages into u from all neighbors except `excluding`."""
    neighbors = model.graph.neighbors[u]
    if len(neighbors) > _LOG_ACCUM_DEGREE:
        acc = 0.0
        for w in neighbors:
            if w != excluding:
                acc += math.log(messages[(w, u)])
        try:
            return math.exp(acc)
        except OverflowError:
            raise NumericOverflow(
                f"neighbor product into node {u} overflows") from None
    prod = 1.0
    for w in neighbors:
        if w != excluding:
            prod *= messages[(w, u)]
    return prod


def bp_sweep(model: Model, messages: MessageSet) -> MessageSet:
    """One fully synchronous sweep: every directed message updated at once."""
    new: MessageSet = {}
    for u, v in messages:
        x = _in_product(model, messages, u, excluding=v)
        if not math.isfinite(x):
            raise NumericOverflow(f"neighbor product into node {u} is {x!r}")
        new[(u, v)] = f_edge(model, (u, v), x)
    return new


def fixed_point_residual(model: Model, messages: MessageSet) -> float:
    """max over directed edges of |m / f(in-product) - 1|."""
    worst = 0.0
    for (u, v), m in messages.items():
        x = _in_product(model, messages, u, excluding=v)
        worst = max(worst, abs(m / f_edge(model, (u, v), x) - 1.0))
    return worst


def bp_marginals(model: Model, messages: MessageSet):
    """Marginal estimates from a message set (any, converged or not).

    Node: tau_v(x) proportional to psi_v(x) * prod_u m_{u->v}(x), lifting the
    reduced message via m(1) = m, m(0) = 1.  Edge: the standard two-sided
    formula with the direct edge's messages excluded from the products.
    """
    n = model.graph.node_count
    node = np.zeros(n)
    for v in range(n):
        prod = _in_product(model, messages, v, excluding=-1)
        w0 = model.node_potential[v, 0]
        w1 = model.node_potential[v, 1] * prod
        node[v] = w1 / (w0 + w1)

    edge = {}
    for u, v in model.graph.edges:
        t = model.edge_table(u, v)
        pu = _in_product(model, messages, u, excluding=v)
        pv = _in_product(model, messages, v, excluding=u)
        table = np.empty((2, 2))
        for a in (0, 1):
            for b in (0, 1):
                table[a, b] = (t[a, b]
                               * model.node_potential[u, a] * (pu if a else 1.0)
                               * model.node_potential[v, b] * (pv if b else 1.0))
        table /= table.sum()
        edge[(u, v)] = table
    return MarginalEstimates(node=node, edge=edge)


@dataclass(frozen=True)
class MarginalEstimates:
    """Node values tau_v(1) and per-edge 2x2 joint tables."""

    node: np.ndarray
    edge: dict[tuple[int, int], np.ndarray]


def run_bp(model: Model, init: MessageSet | None = None, epsilon: float = 1e-3,
           max_iters: int = 200, damping: float = 0.0,
           tracked_nodes: tuple[int, ...] = ()):
    """Iterate bp_sweep until the residual is <= epsilon or the budget ends.

    Returns (messages, trace, converged).  `damping` in [0, 1) geometrically
    mixes each new message with the previous one (0 = plain BP, the default
    everywhere).  The trace records the residual and tracked node marginals
    once per sweep.
    """
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must be in (0,1), got {epsilon}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    if not (0.0 <= damping < 1.0):
        raise ValueError(f"damping must be in [0,1), got {damping}")

    messages = dict(init) if init is not None else unit_messages(model)
    check_messages(model, messages)
    trace = SolveTrace(tracked_nodes=tuple(tracked_nodes))
    converged = False
    for t in range(1, max_iters + 1):
        new = bp_sweep(model, messages)
        if damping > 0.0:
            new = {k: (messages[k] ** damping) * (m ** (1.0 - damping))
                   for k, m in new.items()}
        messages = new
        residual = fixed_point_residual(model, messages)
        if tracked_nodes:
            marg = bp_marginals(model, messages).node
            tracked = tuple(float(marg[v]) for v in tracked_nodes)
        else:
            tracked = ()
        trace.append(t, math.nan, math.nan, residual, tracked)
        if residual <= epsilon:
            converged = True
            break
    return messages, trace, converged
