"""Categorical extension: round-robin pairwise-slice ascent on tau tables.

For alphabets of size Q >= 3 the state is the full set of node vectors
tau_v(.) and edge tables tau_{u,v}(.,.).  One step picks a symbol pair
(p, q) and updates, for every node, the probability mass assigned to p
inside the two-symbol slice {p, q}, holding everything outside the slice
fixed.  Within a slice the problem is exactly the binary one after a
change of scale, and the machinery below leans on that reduction:

* node v's slice mass is c_v = tau_v(p) + tau_v(q), and the update moves
  tau_v(p) inside (0, c_v) with the projection rescaled by c_v;
* per edge, the slice's 2x2 block must keep marginalizing to the node
  values, given that the entries outside the block are held fixed; the
  block's row/column masses are therefore the node values minus the fixed
  outside-of-slice row/column mass, and the (p,p) entry is the pairwise
  root on the block's own scale.

All back-fill identities here are exact reconstructions from these
constraints, so normalization and marginal consistency are preserved by
construction at every accepted step; a slice whose mass would not support
the update raises DegenerateSlice instead of producing an inconsistent
state.  For Q = 2 the bracketed gradient reduces to the binary one; such
models are representable for cross-checks but the solver rejects them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bethe import pairwise_root
from .errors import DegenerateSlice, UnknownEdge
from .graphs import Graph
from .models import Edge, _check_positive_finite
from .solver import SolverOptions
from .trace import SolveTrace


@dataclass(frozen=True)
class CategoricalModel:
    """Potentials on alphabet {0..Q-1} plus per-pair log-constants.

    node_pair_const[v, p, q] mirrors the binary node constant with (p, q)
    in place of (1, 0); pair_const[e][p, q] mirrors the binary edge
    constant the same way (symmetric in p and q, orientation-free).
    """

    graph: Graph
    alphabet_size: int
    node_potential: np.ndarray              # (n, Q)
    edge_potential: dict[Edge, np.ndarray]  # canonical (u<v) -> (Q, Q) [x_u, x_v]
    node_pair_const: np.ndarray = field(init=False, repr=False)  # (n, Q, Q)
    pair_const: dict[Edge, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        q = self.alphabet_size
        if q < 2:
            raise ValueError(f"alphabet_size must be >= 2, got {q}")
        n = self.graph.node_count
        node_pot = np.asarray(self.node_potential, dtype=float)
        if node_pot.shape != (n, q):
            raise ValueError(f"node potentials must have shape ({n}, {q})")
        for v in range(n):
            for x in range(q):
                _check_positive_finite(node_pot[v, x], f"psi_{v}({x})")
        node_pot = node_pot.copy()
        node_pot.setflags(write=False)
        object.__setattr__(self, "node_potential", node_pot)

        tables: dict[Edge, np.ndarray] = {}
        for e in self.graph.edges:
            if e not in self.edge_potential:
                raise ValueError(f"missing potential table for edge {e}")
            t = np.asarray(self.edge_potential[e], dtype=float)
            if t.shape != (q, q):
                raise ValueError(f"edge table for {e} must be {q}x{q}")
            for a in range(q):
                for b in range(q):
                    _check_positive_finite(t[a, b], f"psi_{e}({a},{b})")
            t = t.copy()
            t.setflags(write=False)
            tables[e] = t
        object.__setattr__(self, "edge_potential", tables)

        log_node = np.log(node_pot)
        log_edge = {e: np.log(t) for e, t in tables.items()}
        node_const = np.zeros((n, q, q))
        for v in range(n):
            for p in range(q):
                for r in range(q):
                    if p == r:
                        continue
                    val = log_node[v, p] - log_node[v, r]
                    for u in self.graph.neighbors[v]:
                        lt = log_edge[(min(u, v), max(u, v))]
                        if u < v:
                            val += lt[r, p] - lt[r, r]
                        else:
                            val += lt[p, r] - lt[r, r]
                    node_const[v, p, r] = val
        node_const.setflags(write=False)
        object.__setattr__(self, "node_pair_const", node_const)

        pair = {}
        for e, lt in log_edge.items():
            c = np.zeros((q, q))
            for p in range(q):
                for r in range(q):
                    if p != r:
                        c[p, r] = lt[r, r] + lt[p, p] - lt[p, r] - lt[r, p]
            c.setflags(write=False)
            pair[e] = c
        object.__setattr__(self, "pair_const", pair)

    def edge_table(self, u: int, v: int) -> np.ndarray:
        e = (min(u, v), max(u, v))
        t = self.edge_potential.get(e)
        if t is None:
            raise UnknownEdge(f"no edge between {u} and {v}")
        return t if u < v else t.T

    @property
    def node_count(self) -> int:
        return self.graph.node_count


def build_categorical(graph: Graph, node_potentials,
                      edge_potentials) -> CategoricalModel:
    """Assemble a CategoricalModel; alphabet size is the node row length.

    Accepts edge tables keyed by either orientation (indexed [x_u, x_v]
    in the key's orientation), or a sequence aligned with graph.edges.
    """
    node_pot = np.asarray(node_potentials, dtype=float)
    if node_pot.ndim != 2:
        raise ValueError("node potentials must be one length-Q row per node")
    q = node_pot.shape[1]
    if isinstance(edge_potentials, dict):
        canon = {}
        for (u, v), t in edge_potentials.items():
            t = np.asarray(t, dtype=float)
            canon[(min(u, v), max(u, v))] = t if u < v else t.T
    else:
        tables = list(edge_potentials)
        if len(tables) != graph.edge_count:
            raise ValueError("one edge table per graph edge is required")
        canon = {e: np.asarray(t, dtype=float) for e, t in zip(graph.edges, tables)}
    return CategoricalModel(graph=graph, alphabet_size=q,
                            node_potential=node_pot, edge_potential=canon)


@dataclass
class TauState:
    """Mutable-by-replacement state: node vectors and edge joint tables."""

    node: np.ndarray                  # (n, Q)
    edge: dict[Edge, np.ndarray]      # canonical (u<v) -> (Q, Q) [x_u, x_v]

    def copy(self) -> "TauState":
        return TauState(node=self.node.copy(),
                        edge={e: t.copy() for e, t in self.edge.items()})


def uniform_state(model: CategoricalModel) -> TauState:
    q = model.alphabet_size
    return TauState(
        node=np.full((model.node_count, q), 1.0 / q),
        edge={e: np.full((q, q), 1.0 / (q * q)) for e in model.graph.edges})


def check_state(model: CategoricalModel, state: TauState,
                tol: float = 1e-9) -> None:
    """Assert normalization, positivity, and marginal consistency."""
    q = model.alphabet_size
    n = model.node_count
    if state.node.shape != (n, q):
        raise ValueError("node table shape mismatch")
    if np.any(state.node <= 0.0) or np.any(state.node >= 1.0):
        raise ValueError("node entries must lie strictly in (0,1)")
    err = np.max(np.abs(state.node.sum(axis=1) - 1.0))
    if err > tol:
        raise ValueError(f"node normalization off by {err:.3e}")
    for e in model.graph.edges:
        t = state.edge[e]
        if t.shape != (q, q):
            raise ValueError(f"edge table shape mismatch at {e}")
        if np.any(t <= 0.0):
            raise ValueError(f"edge table at {e} has non-positive entries")
        u, v = e
        row_err = np.max(np.abs(t.sum(axis=1) - state.node[u]))
        col_err = np.max(np.abs(t.sum(axis=0) - state.node[v]))
        if max(row_err, col_err) > tol:
            raise ValueError(
                f"edge {e} marginalization off by {max(row_err, col_err):.3e}")


def pair_gradient(model: CategoricalModel, state: TauState, p: int,
                  q: int) -> np.ndarray:
    """The bracketed slice gradient d F / d tau_v(p) within the (p,q) slice.

    For each node v, holding tau_v(x) fixed for x outside {p,q}, the edge
    (p,p) entries fixed, and the remaining slice entries tracking the
    marginalization constraints:

        g_v = PSI(v)_{p,q} + ln(tau_v(q)/tau_v(p))
            + sum_u ln( tau_{u,v}(q,q)/tau_{u,v}(q,p) * tau_v(p)/tau_v(q) ).

    Reduces to the binary node gradient when Q = 2 and (p, q) = (1, 0).
    """
    n = model.node_count
    g = np.empty(n)
    for v in range(n):
        tau_p = state.node[v, p]
        tau_q = state.node[v, q]
        val = model.node_pair_const[v, p, q] + math.log(tau_q / tau_p)
        for u in model.graph.neighbors[v]:
            e = (min(u, v), max(u, v))
            t = state.edge[e]
            if u < v:
                t_qq, t_qp = t[q, q], t[q, p]
            else:
                t_qq, t_qp = t[q, q], t[p, q]
            val += math.log(t_qq / t_qp * (tau_p / tau_q))
        g[v] = val
    return g


def pair_step(model: CategoricalModel, state: TauState, p: int, q: int,
              t: int, opts: SolverOptions) -> TauState:
    """One synchronous slice update of all nodes and all edges for (p, q).

    The node value tau_v(p) takes a gradient step and is then clamped into
    the shrinking band of its feasible interval.  Feasibility has two parts:
    the slice budget c_v = tau_v(p) + tau_v(q) is preserved, and for every
    incident edge the updated value must exceed that edge's fixed
    outside-of-slice row mass, so the 2x2 slice block keeps positive row and
    column sums.  The band [lo + s, hi - s] with s = scale * t^(-1/4) *
    (hi - lo) is the usual shrinking projection rescaled onto that feasible
    interval; with a two-symbol alphabet the interval is (0, 1) and this is
    exactly the binary projection.

    Raises DegenerateSlice when some node's slice mass c_v is at or below
    the projection floor, or when an edge's slice block carries no mass to
    redistribute.
    """
    if p == q:
        raise ValueError("p and q must differ")
    alphabet = model.alphabet_size
    if not (0 <= p < alphabet and 0 <= q < alphabet):
        raise ValueError(f"symbols must lie in [0, {alphabet})")

    floor_frac = opts.projection_scale * t ** -0.25
    step = 1.0 / math.sqrt(t + opts.step_offset)
    grad = pair_gradient(model, state, p, q)

    # fixed (untouched) mass in the slice's rows/columns, per edge
    outside = {}
    for e in model.graph.edges:
        table = state.edge[e]
        out_row_p = float(table[p].sum() - table[p, p] - table[p, q])
        out_row_q = float(table[q].sum() - table[q, p] - table[q, q])
        out_col_p = float(table[:, p].sum() - table[p, p] - table[q, p])
        out_col_q = float(table[:, q].sum() - table[p, q] - table[q, q])
        outside[e] = (out_row_p, out_row_q, out_col_p, out_col_q)

    new_node = state.node.copy()
    for v in range(model.node_count):
        c_v = state.node[v, p] + state.node[v, q]
        if c_v <= floor_frac:
            raise DegenerateSlice(
                f"node {v}: slice mass {c_v:.3e} at or below the projection "
                f"floor {floor_frac:.3e} for pair ({p},{q}) at t={t}")
        lo_feas, hi_feas = 0.0, c_v
        for u in model.graph.neighbors[v]:
            e = (min(u, v), max(u, v))
            out_row_p, out_row_q, out_col_p, out_col_q = outside[e]
            fixed_p, fixed_q = (out_row_p, out_row_q) if v == e[0] \
                else (out_col_p, out_col_q)
            lo_feas = max(lo_feas, fixed_p)
            hi_feas = min(hi_feas, c_v - fixed_q)
        width = hi_feas - lo_feas
        if width <= 0.0:
            raise DegenerateSlice(
                f"node {v}: no slice mass left to redistribute for pair "
                f"({p},{q}) at t={t}")
        moved = state.node[v, p] + step * grad[v]
        lo = lo_feas + floor_frac * width
        hi = hi_feas - floor_frac * width
        tau_p = min(max(moved, lo), hi)
        new_node[v, p] = tau_p
        new_node[v, q] = c_v - tau_p

    new_edge = {}
    for e in model.graph.edges:
        u, v = e
        table = state.edge[e].copy()
        out_row_p, out_row_q, out_col_p, out_col_q = outside[e]
        m_u_p = new_node[u, p] - out_row_p
        m_u_q = new_node[u, q] - out_row_q
        m_v_p = new_node[v, p] - out_col_p
        m_v_q = new_node[v, q] - out_col_q
        if min(m_u_p, m_u_q, m_v_p, m_v_q) <= 0.0:
            raise DegenerateSlice(
                f"edge {e}: fixed mass outside the ({p},{q}) slice exceeds "
                "an updated node value")
        mass = 0.5 * ((m_u_p + m_u_q) + (m_v_p + m_v_q))
        alpha = math.exp(model.pair_const[e][p, q])
        y_pp = mass * pairwise_root(alpha, m_u_p / mass, m_v_p / mass)
        table[p, p] = y_pp
        table[p, q] = m_u_p - y_pp
        table[q, p] = m_v_p - y_pp
        table[q, q] = (mass - m_u_p - m_v_p) + y_pp
        new_edge[e] = table
    return TauState(node=new_node, edge=new_edge)


def max_pair_gradient(model: CategoricalModel, state: TauState) -> float:
    """max over ordered-by-< symbol pairs and nodes of |slice gradient|."""
    worst = 0.0
    for p in range(model.alphabet_size):
        for q in range(p + 1, model.alphabet_size):
            g = pair_gradient(model, state, p, q)
            worst = max(worst, float(np.max(np.abs(g))))
    return worst


def solve_nonbinary(model: CategoricalModel, opts: SolverOptions | None = None,
                    tracked_nodes: tuple[int, ...] = ()):
    """Round-robin the symbol pairs until every slice gradient is <= epsilon.

    Pairs (p, q) with p < q cycle in lexicographic order, one pair_step per
    iteration, with the iteration counter advancing globally.  Returns
    (state, trace, converged); converged is False when the budget runs out.
    """
    if model.alphabet_size < 3:
        raise ValueError("solve_nonbinary needs Q >= 3; "
                         "use the binary solver for two-symbol models")
    opts = opts if opts is not None else SolverOptions()
    pairs = [(p, q) for p in range(model.alphabet_size)
             for q in range(p + 1, model.alphabet_size)]
    state = uniform_state(model)
    trace = SolveTrace(tracked_nodes=tuple(tracked_nodes))
    converged = False
    t = 0
    while t < opts.max_iters:
        p, q = pairs[t % len(pairs)]
        t += 1
        state = pair_step(model, state, p, q, t, opts)
        grad_all = math.nan
        if t % opts.check_every == 0:
            grad_all = max_pair_gradient(model, state)
        tracked = tuple(float(state.node[v, 1]) for v in tracked_nodes)
        trace.append(t, grad_all, math.nan, math.nan, tracked)
        if grad_all <= opts.epsilon:
            converged = True
            break
    return state, trace, converged
