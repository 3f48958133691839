"""Shared fixtures and strategies: small graph builders, random graph
strategies, and synthetic TUDataset-format corpora written to disk."""
from __future__ import annotations

import itertools
import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from sgncl.graph import AttributedGraph


# ---------------------------------------------------------------- builders

def path_graph(n: int, node_attrs=None, edge_attrs=None) -> AttributedGraph:
    edges = [(i, i + 1) for i in range(n - 1)]
    return AttributedGraph(n, edges, node_attrs, edge_attrs)


def cycle_graph(n: int) -> AttributedGraph:
    edges = [(i, (i + 1) % n) for i in range(n)]
    return AttributedGraph(n, edges)


def star_graph(leaves: int, node_attrs=None, edge_attrs=None) -> AttributedGraph:
    edges = [(0, i) for i in range(1, leaves + 1)]
    return AttributedGraph(leaves + 1, edges, node_attrs, edge_attrs)


def complete_graph(n: int) -> AttributedGraph:
    edges = list(itertools.combinations(range(n), 2))
    return AttributedGraph(n, edges)


def with_random_attrs(g: AttributedGraph, d: int, r: int, seed: int = 0) -> AttributedGraph:
    rng = np.random.default_rng(seed)
    return AttributedGraph(
        g.n_nodes, g.edges,
        rng.normal(size=(g.n_nodes, d)),
        rng.normal(size=(g.n_edges, r)),
    )


# ---------------------------------------------------------------- strategies

@st.composite
def small_graphs(draw, max_nodes: int = 8, max_node_width: int = 3,
                 max_edge_width: int = 2, min_node_width: int = 0):
    """Random simple graphs with random dense attributes."""
    n = draw(st.integers(min_value=0, max_value=max_nodes))
    all_pairs = list(itertools.combinations(range(n), 2))
    edges = draw(st.lists(st.sampled_from(all_pairs), unique=True)) if all_pairs else []
    d = draw(st.integers(min_value=min_node_width, max_value=max_node_width))
    r = draw(st.integers(min_value=0, max_value=max_edge_width))
    seed = draw(st.integers(min_value=0, max_value=2**31 - 1))
    rng = np.random.default_rng(seed)
    return AttributedGraph(
        n, edges,
        rng.normal(size=(n, d)),
        rng.normal(size=(len(edges), r)),
    )


def permutations_of(n: int):
    return st.permutations(list(range(n)))


# ---------------------------------------------------------------- TUD fixtures

def write_tud(directory: Path, name: str, graphs: list[dict]) -> Path:
    """Write a TUDataset-format directory from per-graph dicts.

    Each dict: n (nodes), edges (undirected pairs, local 0-based), label,
    optional node_labels, node_attrs, edge_labels.  Every undirected edge
    is emitted in both directions, as the real corpora do.
    """
    directory.mkdir(parents=True, exist_ok=True)
    a_lines, ind_lines, lab_lines = [], [], []
    nl_lines, na_lines, el_lines = [], [], []
    offset = 0
    has_nl = any("node_labels" in g for g in graphs)
    has_na = any("node_attrs" in g for g in graphs)
    has_el = any("edge_labels" in g for g in graphs)
    for gi, g in enumerate(graphs, start=1):
        for v in range(g["n"]):
            ind_lines.append(str(gi))
        lab_lines.append(str(g["label"]))
        if has_nl:
            nl_lines.extend(str(x) for x in g["node_labels"])
        if has_na:
            na_lines.extend(", ".join(repr(float(x)) for x in row)
                            for row in g["node_attrs"])
        for ei, (u, v) in enumerate(g["edges"]):
            for (a, b) in ((u, v), (v, u)):
                a_lines.append(f"{a + 1 + offset}, {b + 1 + offset}")
                if has_el:
                    el_lines.append(str(g["edge_labels"][ei]))
        offset += g["n"]
    (directory / f"{name}_A.txt").write_text("\n".join(a_lines) + "\n")
    (directory / f"{name}_graph_indicator.txt").write_text("\n".join(ind_lines) + "\n")
    (directory / f"{name}_graph_labels.txt").write_text("\n".join(lab_lines) + "\n")
    if has_nl:
        (directory / f"{name}_node_labels.txt").write_text("\n".join(nl_lines) + "\n")
    if has_na:
        (directory / f"{name}_node_attributes.txt").write_text("\n".join(na_lines) + "\n")
    if has_el:
        (directory / f"{name}_edge_labels.txt").write_text("\n".join(el_lines) + "\n")
    return directory


def synthetic_corpus(n_graphs: int, seed: int = 0) -> list[dict]:
    """Two structurally distinct classes: sparse rings vs. dense clusters.

    Sized so second-order augmented views stay tiny; node labels carry a
    weak class signal so both topology and attributes matter.
    """
    rng = np.random.default_rng(seed)
    graphs = []
    for i in range(n_graphs):
        label = i % 2
        if label == 0:
            n = int(rng.integers(6, 10))
            edges = [(j, (j + 1) % n) for j in range(n)]
            if rng.random() < 0.5:
                edges.append((0, n // 2))
        else:
            n = int(rng.integers(5, 8))
            edges = set()
            for u in range(n):
                for v in range(u + 1, n):
                    if rng.random() < 0.6:
                        edges.add((u, v))
            for j in range(n - 1):           # keep it connected
                edges.add((j, j + 1))
            edges = sorted(edges)
        node_labels = [int(rng.integers(0, 2)) + label for _ in range(n)]
        graphs.append({"n": n, "edges": list(edges), "label": label,
                       "node_labels": node_labels})
    return graphs


@pytest.fixture(scope="session")
def synthetic_tud_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("tud")
    write_tud(root / "SYNTH", "SYNTH", synthetic_corpus(32, seed=7))
    return root


# ---------------------------------------------------------------- real data

def real_data_root() -> Path | None:
    root = Path(os.environ.get("SGNCL_DATA", "data"))
    return root if root.is_dir() else None


def require_dataset(name: str) -> Path:
    root = real_data_root()
    for candidate in ([root / name, root] if root else []):
        if (candidate / f"{name}_A.txt").is_file():
            return candidate
    pytest.skip(f"dataset {name} not present under SGNCL_DATA or ./data "
                f"(real TUDataset corpora are not bundled)")
