"""Reading and writing model files.

A model is stored as a single JSON document:

* ``nodes``: node count n (nodes are implicitly 0..n-1)
* ``edges``: list of [u, v] pairs
* ``node_potentials``: list aligned with node ids; entry v is
  [psi_v(0), psi_v(1)] (or a length-Q list for categorical models)
* ``edge_potentials``: list aligned with ``edges``; each entry is the table
  for its edge flattened row-major in the [u, v] orientation of that edges
  entry, i.e. [psi(0,0), psi(0,1), psi(1,0), psi(1,1)] for binary models
* ``alphabet_size``: optional; omitted or 2 means binary, Q >= 3 means
  categorical with length-Q rows and Q*Q row-major edge tables.

The loader validates structure here and defers value validation (positivity,
finiteness) to the model constructors.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ModelFormatError
from .graphs import Graph
from .models import Model, build_model


def _structure(doc: dict) -> tuple[int, list, list, list, int]:
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    for key in ("nodes", "edges", "node_potentials", "edge_potentials"):
        if key not in doc:
            raise ModelFormatError(f"missing required field {key!r}")
    nodes = doc["nodes"]
    if not isinstance(nodes, int) or nodes < 1:
        raise ModelFormatError("'nodes' must be a positive integer")
    edges = doc["edges"]
    node_pot = doc["node_potentials"]
    edge_pot = doc["edge_potentials"]
    if len(node_pot) != nodes:
        raise ModelFormatError("one node_potentials row per node is required")
    if len(edge_pot) != len(edges):
        raise ModelFormatError("one edge_potentials row per edge is required")
    q = doc.get("alphabet_size", 2)
    if not isinstance(q, int) or q < 2:
        raise ModelFormatError("'alphabet_size' must be an integer >= 2")
    return nodes, edges, node_pot, edge_pot, q


def load_model(path):
    """Load a model file; returns a Model or, for Q >= 3, a CategoricalModel."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ModelFormatError(f"not valid JSON: {err}") from None
    nodes, edges, node_pot, edge_pot, q = _structure(doc)
    try:
        graph = Graph(node_count=nodes, edges=tuple((int(u), int(v)) for u, v in edges))
    except (TypeError, ValueError) as err:
        raise ModelFormatError(str(err)) from None

    rows = []
    for v, row in enumerate(node_pot):
        if len(row) != q:
            raise ModelFormatError(f"node_potentials[{v}] must have {q} entries")
        rows.append([float(x) for x in row])
    tables = []
    for i, flat in enumerate(edge_pot):
        if len(flat) != q * q:
            raise ModelFormatError(f"edge_potentials[{i}] must have {q * q} entries")
        tables.append(np.asarray([float(x) for x in flat]).reshape(q, q))

    if q == 2:
        # edges may appear in either orientation; tables follow that orientation
        edge_map = {}
        for (u, v), t in zip(edges, tables):
            edge_map[(int(u), int(v))] = t
        return build_model(graph, rows, edge_map)
    from .nonbinary import build_categorical
    edge_map = {}
    for (u, v), t in zip(edges, tables):
        edge_map[(int(u), int(v))] = t
    return build_categorical(graph, rows, edge_map)


def save_model(model, path) -> None:
    """Write a Model or CategoricalModel as a JSON model file."""
    from .nonbinary import CategoricalModel

    doc: dict = {
        "nodes": model.graph.node_count,
        "edges": [[u, v] for u, v in model.graph.edges],
        "node_potentials": [list(map(float, row)) for row in model.node_potential],
        "edge_potentials": [
            [float(x) for x in np.asarray(model.edge_potential[e]).ravel()]
            for e in model.graph.edges
        ],
    }
    if isinstance(model, CategoricalModel):
        doc["alphabet_size"] = model.alphabet_size
    elif not isinstance(model, Model):
        raise TypeError(f"cannot save object of type {type(model).__name__}")
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
