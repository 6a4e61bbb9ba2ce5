"""Brute-force exact inference for small models.

Everything here enumerates configurations in log space, streaming over
chunks with a running log-sum-exp renormalization, so the dynamic range
|psi|**(n + |E|) never overflows.  This module is the ground truth the
rest of the test suite is checked against, so it stays deliberately
simple: no message passing, no recursion, just weighted counting.

Unlike the solver-facing model constructors, the oracle accepts true-zero
potential entries (via :class:`ZeroAllowedModel`), which is needed to
compare perturbed models against their exact zero-constraint counterparts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotATree, TooLargeForEnumeration, UnknownEdge
from .graphs import Graph
from .models import Edge

_MAX_CONFIGS = 2 ** 25
_CHUNK = 2 ** 16


@dataclass(frozen=True)
class ZeroAllowedModel:
    """Potential tables that may contain exact zeros; oracle input only."""

    graph: Graph
    node_potential: np.ndarray              # (n, Q), entries >= 0
    edge_potential: dict[Edge, np.ndarray]  # canonical (u<v) -> (Q, Q)

    def __post_init__(self):
        node_pot = np.asarray(self.node_potential, dtype=float)
        if node_pot.ndim != 2 or node_pot.shape[0] != self.graph.node_count:
            raise ValueError("node potentials must be one length-Q row per node")
        if not np.all(np.isfinite(node_pot)) or np.any(node_pot < 0):
            raise ValueError("node potential entries must be finite and >= 0")
        q = node_pot.shape[1]
        tables = {}
        for e in self.graph.edges:
            if e not in self.edge_potential:
                raise ValueError(f"missing potential table for edge {e}")
            t = np.asarray(self.edge_potential[e], dtype=float)
            if t.shape != (q, q):
                raise ValueError(f"edge table for {e} must be {q}x{q}")
            if not np.all(np.isfinite(t)) or np.any(t < 0):
                raise ValueError("edge potential entries must be finite and >= 0")
            tables[e] = t
        object.__setattr__(self, "node_potential", node_pot)
        object.__setattr__(self, "edge_potential", tables)

    def edge_table(self, u: int, v: int) -> np.ndarray:
        e = (min(u, v), max(u, v))
        t = self.edge_potential.get(e)
        if t is None:
            raise UnknownEdge(f"no edge between {u} and {v}")
        return t if u < v else t.T

    @property
    def alphabet_size(self) -> int:
        return self.node_potential.shape[1]


@dataclass(frozen=True)
class ExactResult:
    """Exact quantities from full enumeration."""

    log_partition: float
    node_marginals: np.ndarray        # binary: (n,) of P(x_v=1); else (n, Q)
    edge_marginals: dict[Edge, np.ndarray]  # canonical (u<v) -> (Q, Q) joint


def _alphabet_size(model) -> int:
    return np.asarray(model.node_potential).shape[1]


def _enumerate(model) -> tuple[float, np.ndarray, dict[Edge, np.ndarray]]:
    """Stream all Q^n configurations; returns (ln Z, node marginals, edge joints)."""
    graph = model.graph
    n = graph.node_count
    q = _alphabet_size(model)
    total = q ** n
    if total > _MAX_CONFIGS:
        raise TooLargeForEnumeration(
            f"{q}^{n} = {total} configurations exceeds the {_MAX_CONFIGS} guard")

    with np.errstate(divide="ignore"):
        log_node = np.log(np.asarray(model.node_potential, dtype=float))
        log_edge = {e: np.log(np.asarray(t, dtype=float)).ravel()
                    for e, t in model.edge_potential.items()}

    place = q ** np.arange(n, dtype=np.int64)
    running_max = -math.inf
    weight_sum = 0.0
    node_acc = np.zeros((n, q))
    edge_acc = {e: np.zeros(q * q) for e in graph.edges}

    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        states = (idx[:, None] // place[None, :]) % q  # (chunk, n)
        logw = np.zeros(len(idx))
        for v in range(n):
            logw += log_node[v][states[:, v]]
        pair_index = {}
        for u, v in graph.edges:
            pi = states[:, u] * q + states[:, v]
            pair_index[(u, v)] = pi
            logw += log_edge[(u, v)][pi]

        chunk_max = float(np.max(logw))
        if chunk_max == -math.inf:
            continue
        if chunk_max > running_max:
            scale = math.exp(running_max - chunk_max) if weight_sum else 0.0
            weight_sum *= scale
            node_acc *= scale
            for acc in edge_acc.values():
                acc *= scale
            running_max = chunk_max
        p = np.exp(logw - running_max)
        weight_sum += float(np.sum(p))
        for v in range(n):
            node_acc[v] += np.bincount(states[:, v], weights=p, minlength=q)
        for e in graph.edges:
            edge_acc[e] += np.bincount(pair_index[e], weights=p, minlength=q * q)

    if weight_sum == 0.0:
        return -math.inf, np.full((n, q), math.nan), {
            e: np.full((q, q), math.nan) for e in graph.edges}
    log_z = running_max + math.log(weight_sum)
    node_marg = node_acc / weight_sum
    edge_marg = {e: acc.reshape(q, q) / weight_sum for e, acc in edge_acc.items()}
    return log_z, node_marg, edge_marg


def exact_partition(model) -> float:
    """ln Z by enumeration; accepts Model, CategoricalModel or ZeroAllowedModel."""
    log_z, _, _ = _enumerate(model)
    return log_z


def exact_marginals(model) -> ExactResult:
    """Exact node and edge marginals for a binary model."""
    if _alphabet_size(model) != 2:
        raise ValueError("exact_marginals is for binary models; "
                         "use exact_categorical for Q >= 3")
    log_z, node_marg, edge_marg = _enumerate(model)
    return ExactResult(log_partition=log_z,
                       node_marginals=node_marg[:, 1].copy(),
                       edge_marginals=edge_marg)


def exact_categorical(model) -> ExactResult:
    """Exact ln Z and marginals for a categorical model (length-Q vectors)."""
    log_z, node_marg, edge_marg = _enumerate(model)
    return ExactResult(log_partition=log_z,
                       node_marginals=node_marg,
                       edge_marginals=edge_marg)


def _clamped_conditional(model, nodes: list[int], clamp_node: int,
                         clamp_state: int, query_node: int) -> float:
    """Pr(x_query = 0 | x_clamp = clamp_state) on the induced submodel."""
    index = {w: i for i, w in enumerate(nodes)}
    sub_edges = tuple((index[a], index[b]) for a, b in model.graph.edges
                      if a in index and b in index)
    sub_graph = Graph(node_count=len(nodes), edges=sub_edges)
    node_pot = np.asarray([model.node_potential[w] for w in nodes], dtype=float)
    clamp_row = np.zeros(node_pot.shape[1])
    clamp_row[clamp_state] = 1.0
    node_pot[index[clamp_node]] = clamp_row
    edge_pot = {}
    for a, b in model.graph.edges:
        if a in index and b in index:
            ia, ib = index[a], index[b]
            table = model.edge_table(a, b)
            e = (min(ia, ib), max(ia, ib))
            edge_pot[e] = table if ia < ib else table.T
    sub = ZeroAllowedModel(graph=sub_graph, node_potential=node_pot,
                           edge_potential=edge_pot)
    _, node_marg, _ = _enumerate(sub)
    return float(node_marg[index[query_node], 0])


def tree_conditional_check(model, v: int, u: int) -> float:
    """Closed-form message value for edge u -> v of a tree model.

    On a tree, the converged reduced message m_{u->v} equals

        psi_{u,v}(0,1) / psi_{u,v}(0,0)
        * Pr_T(x_u=0 | x_v=0) / Pr_T(x_u=0 | x_v=1)

    where T is the subtree hanging off v through u (branches at v other
    than the one toward u are cut).  Returns that right-hand side, computed
    by exact enumeration on T.
    """
    graph = model.graph
    if not graph.is_tree():
        raise NotATree("tree_conditional_check requires a tree")
    if u not in graph.neighbors[v]:
        raise UnknownEdge(f"{u} is not a neighbor of {v}")
    if graph.node_count > 20:
        raise TooLargeForEnumeration("tree check limited to n <= 20")

    # T = v plus everything reachable from u without stepping back into v
    keep = {v, u}
    stack = [u]
    while stack:
        w = stack.pop()
        for x in graph.neighbors[w]:
            if x != v and x not in keep:
                keep.add(x)
                stack.append(x)
    nodes = sorted(keep)

    table = model.edge_table(u, v)  # [x_u, x_v]
    p_given_0 = _clamped_conditional(model, nodes, v, 0, u)
    p_given_1 = _clamped_conditional(model, nodes, v, 1, u)
    return float(table[0, 1] / table[0, 0]) * (p_given_0 / p_given_1)
