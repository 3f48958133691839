"""Attributed undirected graphs and the combinatorial primitives built on them.

Edges are kept in canonical form: every edge is stored once as (u, v) with
u < v, and the edge list is sorted in dictionary order.  The row position of
an edge in that list is its stable relabeled identity, which every transform
in this package relies on.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "AttributedGraph",
    "OpenTriangle",
    "canonical_edges",
    "open_triangles",
    "permute_nodes",
]


class OpenTriangle(NamedTuple):
    """Two distinct edges meeting at ``center``, with ``edge_a < edge_b``.

    Edge ids refer to the canonical edge order of the graph the triangle
    was enumerated from.
    """

    edge_a: int
    center: int
    edge_b: int


def _as_float_matrix(values, n_rows: int, what: str) -> np.ndarray:
    if values is None:
        return np.zeros((n_rows, 0), dtype=np.float64)
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{what} must be a 2-D matrix, got shape {arr.shape}")
    if arr.shape[0] != n_rows:
        raise ValueError(f"{what} has {arr.shape[0]} rows, expected {n_rows}")
    if arr.size and not np.isfinite(arr).all():
        raise ValueError(f"{what} contains non-finite entries")
    return arr


def _as_edge_array(edges, n_nodes: int) -> np.ndarray:
    if edges is None:
        return np.zeros((0, 2), dtype=np.int64)
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                     dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"edges must be (m, 2) pairs, got shape {arr.shape}")
    if arr.min() < 0 or arr.max() >= n_nodes:
        bad = arr[(arr < 0) | (arr >= n_nodes)][0]
        raise ValueError(f"edge endpoint {bad} out of range [0, {n_nodes})")
    return arr


@dataclass(frozen=True, eq=False)
class AttributedGraph:
    """Undirected simple graph with dense node and edge attribute matrices.

    Construction normalizes edge orientation to u < v and sorts the edge
    list (moving ``edge_attrs`` rows along with their edges), then rejects
    self-loops and duplicates.  Instances are immutable; the backing arrays
    are marked read-only so they can be shared freely across workers.
    """

    n_nodes: int
    edges: np.ndarray = field(default=None)          # (m, 2) int64, canonical
    node_attrs: np.ndarray = field(default=None)     # (n, d) float64
    edge_attrs: np.ndarray = field(default=None)     # (m, r) float64

    def __post_init__(self):
        if self.n_nodes < 0:
            raise ValueError("n_nodes must be non-negative")
        edges = _as_edge_array(self.edges, self.n_nodes)
        if edges.size and (edges[:, 0] == edges[:, 1]).any():
            u = int(edges[edges[:, 0] == edges[:, 1]][0, 0])
            raise ValueError(f"self-loop at node {u} is not allowed")
        # orient u < v, then sort lexicographically, keeping attr rows aligned
        edges = np.sort(edges, axis=1)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
        if edges.shape[0] > 1 and (np.diff(edges, axis=0) == 0).all(axis=1).any():
            i = int(np.nonzero((np.diff(edges, axis=0) == 0).all(axis=1))[0][0])
            raise ValueError(f"duplicate edge {tuple(edges[i])}")
        node_attrs = _as_float_matrix(self.node_attrs, self.n_nodes, "node_attrs")
        edge_attrs = _as_float_matrix(self.edge_attrs, len(order), "edge_attrs")
        edge_attrs = edge_attrs[order]
        for arr in (edges, node_attrs, edge_attrs):
            arr.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "node_attrs", node_attrs)
        object.__setattr__(self, "edge_attrs", edge_attrs)

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def node_width(self) -> int:
        return self.node_attrs.shape[1]

    @property
    def edge_width(self) -> int:
        return self.edge_attrs.shape[1]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        if self.n_edges:
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def __eq__(self, other) -> bool:
        if not isinstance(other, AttributedGraph):
            return NotImplemented
        return (
            self.n_nodes == other.n_nodes
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.node_attrs, other.node_attrs)
            and np.array_equal(self.edge_attrs, other.edge_attrs)
        )

    def __repr__(self) -> str:
        return (f"AttributedGraph(n={self.n_nodes}, m={self.n_edges}, "
                f"d={self.node_width}, r={self.edge_width})")


def canonical_edges(graph: AttributedGraph) -> list[tuple[int, int]]:
    """Edge list in dictionary order; position i is the relabeled edge id e_i."""
    return [tuple(int(x) for x in row) for row in graph.edges]


def open_triangles(graph: AttributedGraph) -> list[OpenTriangle]:
    """Every unordered pair of distinct edges sharing a node.

    One entry per pair, with edge_a < edge_b, sorted by (edge_a, edge_b).
    The total count equals sum over nodes of C(deg(v), 2).
    """
    incident: list[list[int]] = [[] for _ in range(graph.n_nodes)]
    for idx, (u, v) in enumerate(graph.edges):
        incident[u].append(idx)
        incident[v].append(idx)
    out: list[OpenTriangle] = []
    for center, edge_ids in enumerate(incident):
        # edge ids are appended in increasing order, so pairs come out a < b
        for a, b in itertools.combinations(edge_ids, 2):
            out.append(OpenTriangle(a, center, b))
    out.sort(key=lambda t: (t.edge_a, t.edge_b))
    return out


def permute_nodes(graph: AttributedGraph, perm: Sequence[int]) -> AttributedGraph:
    """Relabel node i as perm[i] and restore canonical edge order.

    Attribute rows move with their nodes and edges.  ``perm`` must be a
    bijection on [0, n_nodes).
    """
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (graph.n_nodes,) or not np.array_equal(
            np.sort(perm), np.arange(graph.n_nodes)):
        raise ValueError(f"perm is not a bijection on [0, {graph.n_nodes})")
    new_nodes = np.empty_like(graph.node_attrs)
    new_nodes[perm] = graph.node_attrs
    new_edges = perm[graph.edges] if graph.n_edges else graph.edges
    return AttributedGraph(graph.n_nodes, new_edges, new_nodes, graph.edge_attrs)
