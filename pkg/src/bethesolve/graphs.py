"""Undirected graphs for pairwise models.

Nodes are integers 0..n-1.  Edges are stored once, as (min, max) pairs in
sorted order, and adjacency is precomputed at construction.  Graph objects
are immutable; every model and solver in the package shares them freely.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SideTooSmall


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph on nodes 0..node_count-1."""

    node_count: int
    edges: tuple[tuple[int, int], ...]
    neighbors: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("graph needs at least one node")
        seen = set()
        canon = []
        for u, v in self.edges:
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise ValueError(f"edge ({u}, {v}) references a missing node")
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            e = (min(u, v), max(u, v))
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
            canon.append(e)
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "neighbors", tuple(tuple(sorted(a)) for a in adj))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self.neighbors), default=0)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._edge_set

    @property
    def _edge_set(self) -> frozenset:
        # cached lazily on first use; frozen dataclass, so go through __dict__
        cached = self.__dict__.get("_edge_set_cache")
        if cached is None:
            cached = frozenset(self.edges)
            object.__setattr__(self, "_edge_set_cache", cached)
        return cached

    def is_tree(self) -> bool:
        """True when the graph is connected and has exactly n-1 edges."""
        if self.edge_count != self.node_count - 1:
            return False
        return self.is_connected()

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for w in self.neighbors[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.node_count


def grid_index(i: int, j: int, side: int) -> int:
    """Row-major index of grid cell (i, j); cell (0, 0) is node 0."""
    return i * side + j


def make_grid_graph(side: int, wrap: bool) -> Graph:
    """Build a side x side square grid, optionally with toroidal wrap-around.

    Wrapping needs side >= 3 so that wrap edges do not duplicate the interior
    ones; the open grid allows side >= 2.  The wrapped grid is 4-regular with
    2 * side**2 edges.
    """
    if wrap and side < 3:
        raise SideTooSmall(f"wrapped grid needs side >= 3, got {side}")
    if not wrap and side < 2:
        raise SideTooSmall(f"grid needs side >= 2, got {side}")
    edges = []
    for i in range(side):
        for j in range(side):
            here = grid_index(i, j, side)
            if j + 1 < side:
                edges.append((here, grid_index(i, j + 1, side)))
            elif wrap:
                edges.append((here, grid_index(i, 0, side)))
            if i + 1 < side:
                edges.append((here, grid_index(i + 1, j, side)))
            elif wrap:
                edges.append((here, grid_index(0, j, side)))
    return Graph(node_count=side * side, edges=tuple(edges))


def make_random_tree(node_count: int, seed: int) -> Graph:
    """Random tree by uniform attachment: node v joins a uniform earlier node.

    Uses numpy's default_rng (PCG64), so a fixed seed pins the tree exactly.
    """
    if node_count < 1:
        raise ValueError("tree needs at least one node")
    rng = np.random.default_rng(seed)
    edges = []
    for v in range(1, node_count):
        parent = int(rng.integers(0, v))
        edges.append((parent, v))
    return Graph(node_count=node_count, edges=tuple(edges))


def make_path_graph(node_count: int) -> Graph:
    """Path 0 - 1 - ... - (n-1)."""
    return Graph(node_count=node_count,
                 edges=tuple((v, v + 1) for v in range(node_count - 1)))
