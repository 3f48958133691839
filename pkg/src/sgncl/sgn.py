"""Edge-to-node graph augmentation.

The transform maps each edge of a graph to a node of the augmented view and
connects two such nodes whenever the underlying edges share an endpoint
(i.e. form an open triangle).  Attributes travel along: the new node for
edge (v_i, v_j), i < j, carries concat(x_i, x_j); the new edge for the open
triangle (e_a, v_c, e_b), a < b, carries concat(u_a, x_c, u_b).  Attribute
widths therefore follow d' = 2d and r' = 2r + d at every application.

Iterating the transform yields higher orders; only orders 1 and 2 are
supported.  A size guard bounds the combinatorial growth of iterated views.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .graph import AttributedGraph, open_triangles

__all__ = [
    "SgnView",
    "SizeGuard",
    "GuardExceeded",
    "as_view",
    "line_graph",
    "edge_to_node",
    "sgn",
    "augment_dataset",
]


class GuardExceeded(RuntimeError):
    """An augmented view outgrew the configured size guard."""

    def __init__(self, origin: int, order: int, kind: str, count: int, limit: int):
        self.origin = origin
        self.order = order
        self.kind = kind
        self.count = count
        self.limit = limit
        super().__init__(
            f"augmentation too large: graph {origin} at order {order} has "
            f"{count} {kind} (guard allows {limit})"
        )


@dataclass(frozen=True)
class SizeGuard:
    """Per-view ceilings on augmented node and edge counts."""

    max_nodes: int = 20_000
    max_edges: int = 200_000

    def __post_init__(self):
        if self.max_nodes <= 0 or self.max_edges <= 0:
            raise ValueError("size guard limits must be positive")

    def check(self, graph: AttributedGraph, origin: int, order: int) -> None:
        if graph.n_nodes > self.max_nodes:
            raise GuardExceeded(origin, order, "nodes", graph.n_nodes, self.max_nodes)
        if graph.n_edges > self.max_edges:
            raise GuardExceeded(origin, order, "edges", graph.n_edges, self.max_edges)


@dataclass(frozen=True)
class SgnView:
    """A graph tagged with its augmentation order and source index."""

    graph: AttributedGraph
    order: int
    origin: int = 0

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be non-negative")


def as_view(graph: AttributedGraph, origin: int = 0) -> SgnView:
    """Wrap an original graph as its own order-0 view."""
    return SgnView(graph, order=0, origin=origin)


def line_graph(graph: AttributedGraph) -> AttributedGraph:
    """Topology-only edge adjacency graph: one node per edge of the input,
    connected iff the edges share an endpoint.  Attribute widths are zero."""
    new_edges = [(t.edge_a, t.edge_b) for t in open_triangles(graph)]
    return AttributedGraph(graph.n_edges, new_edges)


def edge_to_node(view: SgnView) -> SgnView:
    """One application of the attributed edge-to-node transform."""
    g = view.graph
    x, u = g.node_attrs, g.edge_attrs
    d = g.node_width
    triangles = open_triangles(g)
    if d == 0 and triangles:
        raise ValueError(
            "edge_to_node needs node attributes (d >= 1) to form edge "
            "attributes; run the degree featurizer first"
        )
    if g.n_edges:
        # node k of the output is edge e_k = (v_i, v_j), i < j
        new_x = np.hstack([x[g.edges[:, 0]], x[g.edges[:, 1]]])
    else:
        new_x = np.zeros((0, 2 * d))
    if triangles:
        a = np.array([t.edge_a for t in triangles])
        c = np.array([t.center for t in triangles])
        b = np.array([t.edge_b for t in triangles])
        new_u = np.hstack([u[a], x[c], u[b]])
        new_edges = np.stack([a, b], axis=1)
    else:
        new_u = np.zeros((0, 2 * g.edge_width + d))
        new_edges = []
    out = AttributedGraph(g.n_edges, new_edges, new_x, new_u)
    return SgnView(out, order=view.order + 1, origin=view.origin)


def sgn(view: SgnView, target_order: int, guard: SizeGuard = SizeGuard()) -> SgnView:
    """Iterate edge_to_node up to the requested order, guarding growth.

    Raises GuardExceeded as soon as an intermediate view breaks the guard;
    callers decide whether to skip the graph or abort the run.
    """
    if target_order not in (1, 2):
        raise ValueError(f"target_order must be 1 or 2, got {target_order}")
    if view.order != 0:
        raise ValueError(f"sgn starts from an order-0 view, got order {view.order}")
    out = view
    for _ in range(target_order):
        out = edge_to_node(out)
        guard.check(out.graph, out.origin, out.order)
    return out


def _worker_count() -> int:
    env = os.environ.get("SGNCL_THREADS", "").strip()
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("SGNCL_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def augment_dataset(graphs, order: int, guard: SizeGuard = SizeGuard(),
                    strict: bool = False):
    """Augment every graph of a collection to the given order.

    Returns (views, skipped_indices); a skipped graph leaves a None in the
    views list.  With strict=True the first guard violation propagates.
    Per-graph outputs are deterministic regardless of worker scheduling.
    """
    def one(idx_graph):
        idx, graph = idx_graph
        try:
            return sgn(as_view(graph, origin=idx), order, guard)
        except GuardExceeded:
            if strict:
                raise
            return None

    items = list(enumerate(graphs))
    workers = min(_worker_count(), max(1, len(items)))
    if workers == 1:
        views = [one(it) for it in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            views = list(pool.map(one, items))
    skipped = [i for i, v in enumerate(views) if v is None]
    return views, skipped
