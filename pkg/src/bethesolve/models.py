"""Pairwise binary models: potential tables plus precomputed log-constants.

A model couples a :class:`~bethesolve.graphs.Graph` with strictly positive
node potentials psi_v(x) and edge potentials psi_{u,v}(x_u, x_v).  At
construction we precompute the quantities every solver needs:

* the node field constant
  PSI(v) = ln(psi_v(1)/psi_v(0)) + sum_{u in N(v)} ln(psi_{u,v}(0,1)/psi_{u,v}(0,0)),
* the edge coupling constant
  PSI(u,v) = ln(psi(0,0) psi(1,1) / (psi(1,0) psi(0,1))),
* the potential bound |psi| = max over all entries of e^{|ln psi|}.

Edge tables are stored once, oriented by (min node id, max node id); the
accessor :meth:`Model.edge_table` transposes transparently, so
psi_{u,v}(a, b) = psi_{v,u}(b, a) always holds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFinitePotential, UnknownEdge, ZeroOrNegativePotential
from .graphs import Graph

Edge = tuple[int, int]


def _check_positive_finite(value: float, where: str) -> None:
    if not math.isfinite(value):
        raise NonFinitePotential(f"potential entry {where} is {value!r}")
    if value <= 0.0:
        raise ZeroOrNegativePotential(
            f"potential entry {where} is {value!r}; entries must be strictly "
            "positive (replace exact zeros with a small positive value)")


@dataclass(frozen=True)
class Model:
    """Immutable pairwise binary model; build with :func:`build_model`."""

    graph: Graph
    node_potential: np.ndarray          # shape (n, 2), row v = (psi_v(0), psi_v(1))
    edge_potential: dict[Edge, np.ndarray]  # canonical (u<v) -> 2x2 [x_u, x_v]
    psi_node_const: np.ndarray = field(init=False, repr=False)  # PSI(v), shape (n,)
    psi_edge_const: dict[Edge, float] = field(init=False, repr=False)
    psi_bound: float = field(init=False)

    def __post_init__(self):
        n = self.graph.node_count
        node_pot = np.asarray(self.node_potential, dtype=float)
        if node_pot.shape != (n, 2):
            raise ValueError(f"node potentials must have shape ({n}, 2)")
        for v in range(n):
            for x in (0, 1):
                _check_positive_finite(node_pot[v, x], f"psi_{v}({x})")
        node_pot = node_pot.copy()
        node_pot.setflags(write=False)
        object.__setattr__(self, "node_potential", node_pot)

        tables: dict[Edge, np.ndarray] = {}
        for e in self.graph.edges:
            if e not in self.edge_potential:
                raise ValueError(f"missing potential table for edge {e}")
            t = np.asarray(self.edge_potential[e], dtype=float)
            if t.shape != (2, 2):
                raise ValueError(f"edge table for {e} must be 2x2")
            for a in (0, 1):
                for b in (0, 1):
                    _check_positive_finite(t[a, b], f"psi_{e}({a},{b})")
            t = t.copy()
            t.setflags(write=False)
            tables[e] = t
        if len(self.edge_potential) != len(tables):
            extra = set(self.edge_potential) - set(tables)
            raise UnknownEdge(f"potential tables for absent edges: {sorted(extra)}")
        object.__setattr__(self, "edge_potential", tables)

        psi_node = np.zeros(n)
        for v in range(n):
            psi_node[v] = math.log(node_pot[v, 1] / node_pot[v, 0])
            for u in self.graph.neighbors[v]:
                t = self.edge_table(u, v)
                psi_node[v] += math.log(t[0, 1] / t[0, 0])
        psi_node.setflags(write=False)
        object.__setattr__(self, "psi_node_const", psi_node)

        psi_edge = {}
        for e, t in tables.items():
            psi_edge[e] = math.log(t[0, 0] * t[1, 1] / (t[1, 0] * t[0, 1]))
        object.__setattr__(self, "psi_edge_const", psi_edge)

        bound = 1.0
        for v in range(n):
            for x in (0, 1):
                bound = max(bound, node_pot[v, x], 1.0 / node_pot[v, x])
        for t in tables.values():
            for a in (0, 1):
                for b in (0, 1):
                    bound = max(bound, t[a, b], 1.0 / t[a, b])
        object.__setattr__(self, "psi_bound", float(bound))

    def edge_table(self, u: int, v: int) -> np.ndarray:
        """Table for edge {u, v} indexed as [x_u, x_v], any orientation."""
        e = (min(u, v), max(u, v))
        t = self.edge_potential.get(e)
        if t is None:
            raise UnknownEdge(f"no edge between {u} and {v}")
        return t if u < v else t.T

    def edge_const(self, u: int, v: int) -> float:
        """PSI(u,v); symmetric under swapping u and v."""
        e = (min(u, v), max(u, v))
        c = self.psi_edge_const.get(e)
        if c is None:
            raise UnknownEdge(f"no edge between {u} and {v}")
        return c

    @property
    def node_count(self) -> int:
        return self.graph.node_count


def build_model(graph: Graph, node_potentials, edge_potentials) -> Model:
    """Validate potentials and assemble a Model with the log-constants.

    ``node_potentials`` is a sequence of (psi_v(0), psi_v(1)) pairs aligned
    with node ids.  ``edge_potentials`` maps each graph edge (any orientation)
    to a 2x2 table indexed [x_u, x_v] in that orientation; a sequence aligned
    with ``graph.edges`` is also accepted.
    """
    if isinstance(edge_potentials, dict):
        canon: dict[Edge, np.ndarray] = {}
        for (u, v), t in edge_potentials.items():
            t = np.asarray(t, dtype=float)
            if t.shape != (2, 2):
                raise ValueError(f"edge table for ({u}, {v}) must be 2x2")
            canon[(min(u, v), max(u, v))] = t if u < v else t.T
    else:
        tables = list(edge_potentials)
        if len(tables) != graph.edge_count:
            raise ValueError("one edge table per graph edge is required")
        canon = {e: np.asarray(t, dtype=float) for e, t in zip(graph.edges, tables)}
    return Model(graph=graph,
                 node_potential=np.asarray(node_potentials, dtype=float),
                 edge_potential=canon)


def psi_bound(model: Model) -> float:
    """The potential bound |psi|; equals 1 iff every entry is 1."""
    return model.psi_bound


def make_hardcore(graph: Graph, fugacity: float,
                  zero_replacement: float = 0.001) -> Model:
    """Hard-core model: psi_v = (1, fugacity), psi(1,1) = zero_replacement.

    The exact hard-core constraint psi(1,1) = 0 lies outside the strictly
    positive regime, so the (1,1) entry is replaced by a small positive
    value; 0.001 is the conventional choice.
    """
    n = graph.node_count
    node_pot = [(1.0, float(fugacity))] * n
    table = [[1.0, 1.0], [1.0, float(zero_replacement)]]
    edge_pot = {e: table for e in graph.edges}
    return build_model(graph, node_pot, edge_pot)


def make_ising(graph: Graph, edge_weight: float, node_seed: int) -> Model:
    """Ising-style model: edge diagonal = edge_weight, off-diagonal = 1.

    psi_v(0) = 1 and psi_v(1) is i.i.d. uniform on [1/2, 2], drawn from
    numpy's default_rng (PCG64) seeded with node_seed, so the same seed
    reproduces the same model bit-for-bit.
    """
    w = float(edge_weight)
    rng = np.random.default_rng(node_seed)
    field_values = rng.uniform(0.5, 2.0, size=graph.node_count)
    node_pot = [(1.0, float(h)) for h in field_values]
    table = [[w, 1.0], [1.0, w]]
    edge_pot = {e: table for e in graph.edges}
    return build_model(graph, node_pot, edge_pot)


def make_random_model(graph: Graph, seed: int, low: float = 0.5,
                      high: float = 2.0) -> Model:
    """All potential entries i.i.d. uniform on [low, high] (PCG64-seeded).

    With low = 1/high the potential bound satisfies |psi| <= high.
    """
    rng = np.random.default_rng(seed)
    node_pot = rng.uniform(low, high, size=(graph.node_count, 2))
    edge_pot = {e: rng.uniform(low, high, size=(2, 2)) for e in graph.edges}
    return build_model(graph, node_pot, edge_pot)
