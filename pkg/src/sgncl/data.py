"""Dataset ingestion, featurization, statistics, and the interchange format.

TUDataset layout (files directly inside one directory):

    <name>_A.txt                comma-separated 1-based node pairs, one
                                directed line per edge direction
    <name>_graph_indicator.txt  1-based graph id of each node
    <name>_graph_labels.txt     integer class label per graph
    <name>_node_labels.txt      optional; categorical label per node
    <name>_node_attributes.txt  optional; comma-separated floats per node
    <name>_edge_labels.txt      optional; categorical label per A-file line

Categorical labels are one-hot encoded over the dataset-wide vocabulary;
when a dataset has both node labels and continuous attributes the one-hot
columns come first.  Graph labels are remapped to 0..C-1 by sorted value.

Interchange format (augmented views have attribute widths TUDataset files
cannot carry): newline-delimited JSON, UTF-8.  The first record is a header

    {"format": "sgncl-graphs", "version": 1, "name": ..., "class_count": ...,
     "count": ...}

followed by exactly ``count`` graph records

    {"n": ..., "edges": [[u, v], ...], "node_attrs": [[...], ...],
     "edge_attrs": [[...], ...], "label": ..., "order": ..., "origin": ...}

Floats are serialized with shortest round-trip repr, so write-then-read
reproduces a dataset bit-exactly.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graph import AttributedGraph
from .sgn import SgnView

__all__ = [
    "DatasetFormatError",
    "GraphDataset",
    "DatasetStats",
    "load_tud",
    "resolve_tud_dir",
    "degree_featurize",
    "stats",
    "write_interchange",
    "read_interchange",
    "roundtrip_interchange",
]

log = logging.getLogger(__name__)

INTERCHANGE_FORMAT = "sgncl-graphs"
INTERCHANGE_VERSION = 1


class DatasetFormatError(ValueError):
    """A dataset file is missing, truncated, or malformed."""

    def __init__(self, message: str, path=None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}: "
            if line is not None:
                loc = f"{path}, line {line}: "
        super().__init__(loc + message)
        self.path = path
        self.line = line


@dataclass(frozen=True, eq=False)
class GraphDataset:
    """Ordered graphs with class labels and per-graph provenance.

    ``orders[i]`` is the augmentation order of graph i (0 for originals) and
    ``origins[i]`` the index of its source graph, so augmented collections
    round-trip through the interchange format without losing lineage.
    """

    graphs: tuple[AttributedGraph, ...]
    labels: np.ndarray
    name: str
    class_count: int
    orders: np.ndarray = None
    origins: np.ndarray = None

    def __post_init__(self):
        graphs = tuple(self.graphs)
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (len(graphs),):
            raise ValueError("labels must align one-to-one with graphs")
        if len(graphs) and (labels.min() < 0 or labels.max() >= self.class_count):
            raise ValueError(f"labels must lie in [0, {self.class_count})")
        orders = (np.zeros(len(graphs), dtype=np.int64) if self.orders is None
                  else np.asarray(self.orders, dtype=np.int64))
        origins = (np.arange(len(graphs), dtype=np.int64) if self.origins is None
                   else np.asarray(self.origins, dtype=np.int64))
        if orders.shape != (len(graphs),) or origins.shape != (len(graphs),):
            raise ValueError("orders/origins must align one-to-one with graphs")
        widths = {(g.node_width, g.edge_width) for g in graphs}
        if len(widths) > 1:
            raise ValueError(f"graphs carry mixed attribute widths: {sorted(widths)}")
        for arr in (labels, orders, origins):
            arr.setflags(write=False)
        object.__setattr__(self, "graphs", graphs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "origins", origins)

    def __len__(self) -> int:
        return len(self.graphs)

    @property
    def node_width(self) -> int:
        return self.graphs[0].node_width if self.graphs else 0

    @property
    def edge_width(self) -> int:
        return self.graphs[0].edge_width if self.graphs else 0

    def views(self) -> list[SgnView]:
        return [SgnView(g, order=int(o), origin=int(s))
                for g, o, s in zip(self.graphs, self.orders, self.origins)]

    @staticmethod
    def from_views(views: Sequence[SgnView], labels, name: str,
                   class_count: int) -> "GraphDataset":
        return GraphDataset(
            tuple(v.graph for v in views), labels, name, class_count,
            orders=[v.order for v in views], origins=[v.origin for v in views],
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, GraphDataset):
            return NotImplemented
        return (
            self.name == other.name
            and self.class_count == other.class_count
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.orders, other.orders)
            and np.array_equal(self.origins, other.origins)
            and self.graphs == other.graphs
        )


@dataclass(frozen=True)
class DatasetStats:
    graph_count: int
    class_count: int
    avg_nodes: float
    avg_edges: float


def stats(dataset: GraphDataset) -> DatasetStats:
    """Exact arithmetic means of node and undirected edge counts."""
    if len(dataset) == 0:
        raise ValueError("cannot compute stats of an empty dataset")
    nodes = [g.n_nodes for g in dataset.graphs]
    edges = [g.n_edges for g in dataset.graphs]
    return DatasetStats(
        graph_count=len(dataset),
        class_count=dataset.class_count,
        avg_nodes=sum(nodes) / len(nodes),
        avg_edges=sum(edges) / len(edges),
    )


# ------------------------------------------------------------------ TUD loader

def resolve_tud_dir(directory, name: str) -> Path:
    """Accept either the dataset directory itself or its parent."""
    directory = Path(directory)
    for candidate in (directory, directory / name):
        if (candidate / f"{name}_A.txt").is_file():
            return candidate
    raise DatasetFormatError(f"missing mandatory file {name}_A.txt", path=directory)


def _read_lines(path: Path) -> list[str]:
    return path.read_text().splitlines()


def _int_lines(path: Path) -> list[int]:
    out = []
    for i, raw in enumerate(_read_lines(path), start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            out.append(int(float(raw)))
        except ValueError:
            raise DatasetFormatError(f"expected an integer, got {raw!r}",
                                     path=path, line=i) from None
    return out


def _one_hot(values: Sequence[int]) -> np.ndarray:
    vocab = sorted(set(values))
    index = {v: k for k, v in enumerate(vocab)}
    out = np.zeros((len(values), len(vocab)))
    for row, v in enumerate(values):
        out[row, index[v]] = 1.0
    return out


def load_tud(directory, name: str) -> GraphDataset:
    """Load one TUDataset-format corpus into memory.

    Node ids are compacted to dense 0-based ids per graph, each undirected
    edge is stored once, self-loops are dropped (with a warning) and
    duplicate edges deduplicated.
    """
    directory = resolve_tud_dir(directory, name)
    a_path = directory / f"{name}_A.txt"
    ind_path = directory / f"{name}_graph_indicator.txt"
    lab_path = directory / f"{name}_graph_labels.txt"
    for p in (a_path, ind_path, lab_path):
        if not p.is_file():
            raise DatasetFormatError(f"missing mandatory file {p.name}", path=directory)

    indicator = _int_lines(ind_path)
    raw_graph_labels = _int_lines(lab_path)
    n_graphs = len(raw_graph_labels)
    if indicator and (min(indicator) < 1 or max(indicator) > n_graphs):
        raise DatasetFormatError(
            f"graph indicator value outside [1, {n_graphs}]", path=ind_path)

    # global 1-based node id -> (graph index, local 0-based id)
    graph_of = np.asarray(indicator, dtype=np.int64) - 1
    local_id = np.zeros(len(indicator), dtype=np.int64)
    counts = np.zeros(n_graphs, dtype=np.int64)
    for node, g in enumerate(graph_of):
        local_id[node] = counts[g]
        counts[g] += 1

    node_label_path = directory / f"{name}_node_labels.txt"
    node_attr_path = directory / f"{name}_node_attributes.txt"
    edge_label_path = directory / f"{name}_edge_labels.txt"

    node_feature_blocks = []
    if node_label_path.is_file():
        node_labels = _int_lines(node_label_path)
        if len(node_labels) != len(indicator):
            raise DatasetFormatError(
                f"{len(node_labels)} node labels for {len(indicator)} nodes",
                path=node_label_path)
        node_feature_blocks.append(_one_hot(node_labels))
    if node_attr_path.is_file():
        rows = []
        for i, raw in enumerate(_read_lines(node_attr_path), start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rows.append([float(tok) for tok in raw.split(",")])
            except ValueError:
                raise DatasetFormatError(f"bad attribute row {raw!r}",
                                         path=node_attr_path, line=i) from None
        if len(rows) != len(indicator):
            raise DatasetFormatError(
                f"{len(rows)} attribute rows for {len(indicator)} nodes",
                path=node_attr_path)
        if len({len(r) for r in rows}) > 1:
            raise DatasetFormatError("attribute rows have mixed widths",
                                     path=node_attr_path)
        node_feature_blocks.append(np.asarray(rows, dtype=np.float64))
    if node_feature_blocks:
        node_features = np.hstack(node_feature_blocks)
    else:
        node_features = np.zeros((len(indicator), 0))

    edge_labels = None
    if edge_label_path.is_file():
        edge_labels = _int_lines(edge_label_path)

    # parse edges; store each undirected edge once, keyed by graph
    per_graph_edges: list[dict] = [dict() for _ in range(n_graphs)]
    dropped_loops = 0
    a_lines = _read_lines(a_path)
    if edge_labels is not None and len(edge_labels) != sum(1 for l in a_lines if l.strip()):
        raise DatasetFormatError("edge label count does not match A-file line count",
                                 path=edge_label_path)
    directed_lines = 0
    for lineno, raw in enumerate(a_lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        parts = raw.replace(",", " ").split()
        if len(parts) != 2:
            raise DatasetFormatError(f"expected 'i, j', got {raw!r}", path=a_path,
                                     line=lineno)
        try:
            gi, gj = int(parts[0]), int(parts[1])
        except ValueError:
            raise DatasetFormatError(f"non-integer node id in {raw!r}", path=a_path,
                                     line=lineno) from None
        if not (1 <= gi <= len(indicator)) or not (1 <= gj <= len(indicator)):
            raise DatasetFormatError(
                f"dangling node reference {max(gi, gj)} "
                f"(dataset has {len(indicator)} nodes)", path=a_path, line=lineno)
        label = edge_labels[directed_lines] if edge_labels is not None else None
        directed_lines += 1
        if graph_of[gi - 1] != graph_of[gj - 1]:
            raise DatasetFormatError(
                f"edge ({gi}, {gj}) crosses graphs "
                f"{graph_of[gi - 1] + 1} and {graph_of[gj - 1] + 1}",
                path=a_path, line=lineno)
        if gi == gj:
            dropped_loops += 1
            continue
        g = graph_of[gi - 1]
        u, v = sorted((int(local_id[gi - 1]), int(local_id[gj - 1])))
        per_graph_edges[g].setdefault((u, v), label)
    if dropped_loops:
        log.warning("%s: dropped %d self-loop line(s)", name, dropped_loops)

    edge_vocab = sorted(set(edge_labels)) if edge_labels is not None else []
    edge_index = {v: k for k, v in enumerate(edge_vocab)}

    graphs = []
    for g in range(n_graphs):
        node_rows = np.nonzero(graph_of == g)[0]
        attrs = node_features[node_rows]
        pairs = sorted(per_graph_edges[g])
        if edge_labels is not None:
            eattr = np.zeros((len(pairs), len(edge_vocab)))
            for row, pair in enumerate(pairs):
                eattr[row, edge_index[per_graph_edges[g][pair]]] = 1.0
        else:
            eattr = np.zeros((len(pairs), 0))
        graphs.append(AttributedGraph(int(counts[g]), pairs, attrs, eattr))

    label_vocab = sorted(set(raw_graph_labels))
    label_map = {v: k for k, v in enumerate(label_vocab)}
    labels = [label_map[v] for v in raw_graph_labels]
    return GraphDataset(tuple(graphs), labels, name, class_count=len(label_vocab))


# ------------------------------------------------------------- featurization

def degree_featurize(dataset: GraphDataset, max_degree: int = 64,
                     replace_attrs: bool = False) -> GraphDataset:
    """Append (or substitute) one-hot clipped-degree node attributes.

    Buckets run 0..max_degree, so width is max_degree + 1 and an isolated
    node maps to bucket 0.  Graphs without edge attributes also gain a
    constant width-1 edge column so iterated edge-to-node stays well-formed.
    """
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    new_graphs = []
    for g in dataset.graphs:
        deg = np.minimum(g.degrees(), max_degree)
        onehot = np.zeros((g.n_nodes, max_degree + 1))
        onehot[np.arange(g.n_nodes), deg] = 1.0
        attrs = onehot if replace_attrs else np.hstack([g.node_attrs, onehot])
        eattr = g.edge_attrs if g.edge_width else np.ones((g.n_edges, 1))
        new_graphs.append(AttributedGraph(g.n_nodes, g.edges, attrs, eattr))
    return GraphDataset(tuple(new_graphs), dataset.labels, dataset.name,
                        dataset.class_count, dataset.orders, dataset.origins)


# ---------------------------------------------------------------- interchange

def write_interchange(dataset: GraphDataset, path) -> None:
    """Serialize a dataset (views included) to newline-delimited JSON."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {"format": INTERCHANGE_FORMAT, "version": INTERCHANGE_VERSION,
                  "name": dataset.name, "class_count": dataset.class_count,
                  "count": len(dataset)}
        fh.write(json.dumps(header) + "\n")
        for g, label, order, origin in zip(dataset.graphs, dataset.labels,
                                           dataset.orders, dataset.origins):
            record = {
                "n": g.n_nodes,
                "d": g.node_width,
                "r": g.edge_width,
                "edges": g.edges.tolist(),
                "node_attrs": g.node_attrs.tolist(),
                "edge_attrs": g.edge_attrs.tolist(),
                "label": int(label),
                "order": int(order),
                "origin": int(origin),
            }
            fh.write(json.dumps(record) + "\n")


def read_interchange(path) -> GraphDataset:
    """Parse an interchange file; malformed input raises with its location."""
    path = Path(path)
    if not path.is_file():
        raise DatasetFormatError("no such file", path=path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DatasetFormatError("empty file", path=path)

    def parse(lineno: int) -> dict:
        try:
            obj = json.loads(lines[lineno - 1])
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"malformed JSON ({exc.msg})", path=path,
                                     line=lineno) from None
        if not isinstance(obj, dict):
            raise DatasetFormatError("record is not an object", path=path, line=lineno)
        return obj

    header = parse(1)
    if header.get("format") != INTERCHANGE_FORMAT:
        raise DatasetFormatError("not an interchange file (bad format field)",
                                 path=path, line=1)
    if header.get("version") != INTERCHANGE_VERSION:
        raise DatasetFormatError(f"unsupported version {header.get('version')!r}",
                                 path=path, line=1)
    count = header.get("count")
    if not isinstance(count, int) or count < 0:
        raise DatasetFormatError("header is missing a valid count", path=path, line=1)
    if len(lines) < 1 + count:
        raise DatasetFormatError(
            f"truncated: header promises {count} records, found {len(lines) - 1}",
            path=path)

    graphs, labels, orders, origins = [], [], [], []
    for k in range(count):
        lineno = 2 + k
        rec = parse(lineno)
        try:
            # widths are explicit so empty matrices keep their shape
            node_attrs = np.asarray(rec["node_attrs"], dtype=np.float64)
            edge_attrs = np.asarray(rec["edge_attrs"], dtype=np.float64)
            graphs.append(AttributedGraph(
                rec["n"], rec["edges"],
                node_attrs.reshape(rec["n"], rec["d"]),
                edge_attrs.reshape(len(rec["edges"]), rec["r"]),
            ))
            labels.append(int(rec["label"]))
            orders.append(int(rec["order"]))
            origins.append(int(rec["origin"]))
        except KeyError as exc:
            raise DatasetFormatError(f"record is missing field {exc}", path=path,
                                     line=lineno) from None
        except ValueError as exc:
            raise DatasetFormatError(str(exc), path=path, line=lineno) from None
    return GraphDataset(tuple(graphs), labels, header.get("name", ""),
                        header["class_count"], orders, origins)


def roundtrip_interchange(dataset: GraphDataset, path) -> GraphDataset:
    """Write then re-read a dataset; the result must equal the input."""
    write_interchange(dataset, path)
    return read_interchange(path)
