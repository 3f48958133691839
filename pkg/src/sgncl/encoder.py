"""Per-view message-passing encoders, layered readout, projection head.

Each view order (0 = original, 1 and 2 = augmented) gets its own encoder
with disjoint parameters; one projection head is shared.  A layer updates
node states as

    h_v  <-  MLP( (1 + eps) * h_v + sum_{u in N(v)} relu(h_u + E u_{uv}) )

with MLP two affine maps separated by a ReLU, E an affine map of the raw
edge attributes, and eps fixed at 0.  The graph representation is the
concatenation over layers of a pooled node state (sum by default), and the
projection head is three affine maps with ReLUs between, L2-normalized.

Weights initialize uniformly in +-sqrt(6 / (fan_in + fan_out)); biases at
zero.  Every component draws from its own child seed (derived from the run
seed and a fixed component tag) so that adding or removing a view encoder
never shifts the initialization of the others.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .sgn import SgnView

__all__ = [
    "Affine",
    "GinLayer",
    "ViewEncoder",
    "EncoderStack",
    "build_stack",
    "encode_nodes",
    "readout",
    "project",
    "encode_graph",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_FORMAT = "sgncl-checkpoint"
CHECKPOINT_VERSION = 1

POOLS = ("sum", "mean", "max")

# component tags for child-seed derivation; order tags match view orders
_HEAD_TAG = 3
BATCH_STREAM_TAG = 4
PROBE_STREAM_TAG = 5


def component_rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(tag,)))


@dataclass
class Affine:
    w: Tensor
    b: Tensor

    def __call__(self, x: Tensor) -> Tensor:
        y = ad.matmul(x, self.w)
        if y.shape[0] == 0:
            return y
        return ad.add(y, self.b)

    @property
    def in_width(self) -> int:
        return self.w.shape[0]

    @property
    def out_width(self) -> int:
        return self.w.shape[1]


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> Affine:
    limit = np.sqrt(6.0 / max(fan_in + fan_out, 1))
    w = ad.parameter(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
    b = ad.parameter(np.zeros((1, fan_out)))
    return Affine(w, b)


@dataclass
class GinLayer:
    mlp1: Affine
    mlp2: Affine
    edge_map: Affine
    epsilon: float = 0.0


@dataclass
class ViewEncoder:
    order: int
    input_proj: Affine
    layers: list[GinLayer]

    @property
    def node_width(self) -> int:
        return self.input_proj.in_width

    @property
    def edge_width(self) -> int:
        return self.layers[0].edge_map.in_width


@dataclass
class EncoderStack:
    hidden: int
    n_layers: int
    pool: str
    encoders: dict[int, ViewEncoder]
    head: list[Affine]

    @property
    def rep_width(self) -> int:
        return self.hidden * self.n_layers

    def parameters(self) -> list[Tensor]:
        """All trainable tensors in a fixed, deterministic order."""
        out: list[Tensor] = []
        for order in sorted(self.encoders):
            enc = self.encoders[order]
            out += [enc.input_proj.w, enc.input_proj.b]
            for layer in enc.layers:
                out += [layer.mlp1.w, layer.mlp1.b, layer.mlp2.w, layer.mlp2.b,
                        layer.edge_map.w, layer.edge_map.b]
        for aff in self.head:
            out += [aff.w, aff.b]
        return out


def build_stack(widths: dict[int, tuple[int, int]], hidden: int, n_layers: int,
                pool: str, seed: int) -> EncoderStack:
    """Create encoders for the given view orders plus the shared head.

    ``widths`` maps view order -> (node attr width, edge attr width).
    """
    if pool not in POOLS:
        raise ValueError(f"pool must be one of {POOLS}, got {pool!r}")
    if hidden < 1 or n_layers < 1:
        raise ValueError("hidden and n_layers must be positive")
    encoders = {}
    for order, (d, r) in sorted(widths.items()):
        rng = component_rng(seed, order)
        layers = [GinLayer(_xavier(rng, hidden, hidden), _xavier(rng, hidden, hidden),
                           _xavier(rng, r, hidden))
                  for _ in range(n_layers)]
        encoders[order] = ViewEncoder(order, _xavier(rng, d, hidden), layers)
    rng = component_rng(seed, _HEAD_TAG)
    width = hidden * n_layers
    head = [_xavier(rng, width, width) for _ in range(3)]
    return EncoderStack(hidden, n_layers, pool, encoders, head)


def _arcs(graph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Directed arcs (both directions per edge) plus the edge id of each arc."""
    m = graph.n_edges
    if m == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    eidx = np.concatenate([np.arange(m), np.arange(m)])
    return src, dst, eidx


def encode_nodes(view: SgnView, stack: EncoderStack) -> list[Tensor]:
    """Run message passing; returns the per-layer node states h^(1..K)."""
    enc = stack.encoders.get(view.order)
    if enc is None:
        raise ValueError(f"stack has no encoder for view order {view.order}")
    g = view.graph
    if g.node_width != enc.node_width or g.edge_width != enc.edge_width:
        raise ValueError(
            f"width mismatch for view order {view.order}: encoder expects "
            f"d={enc.node_width}, r={enc.edge_width}; graph has "
            f"d={g.node_width}, r={g.edge_width}")
    src, dst, eidx = _arcs(g)
    x = ad.tensor(g.node_attrs)
    h = enc.input_proj(x)
    states: list[Tensor] = []
    if g.n_edges:
        u = ad.tensor(g.edge_attrs)
    for layer in enc.layers:
        if g.n_edges:
            edge_emb = layer.edge_map(u)
            messages = ad.relu(ad.add(ad.gather_rows(h, src),
                                      ad.gather_rows(edge_emb, eidx)))
            agg = ad.scatter_rows(messages, dst, g.n_nodes)
            pre = ad.add(ad.smul(h, 1.0 + layer.epsilon), agg)
        else:
            pre = ad.smul(h, 1.0 + layer.epsilon)
        h = layer.mlp2(ad.relu(layer.mlp1(pre)))
        states.append(h)
    return states


def readout(states: list[Tensor], pool: str = "sum") -> Tensor:
    """Pool each layer's node states and concatenate: a (1, K*hidden) row.

    An empty graph (no node rows) reads out as the zero vector.
    """
    if not states:
        raise ValueError("readout needs at least one layer state")
    if pool == "sum":
        pooled = [ad.tsum(h, axis=0) for h in states]
    elif pool == "mean":
        pooled = [ad.tmean(h, axis=0) for h in states]
    elif pool == "max":
        pooled = [ad.tmax(h, axis=0) for h in states]
    else:
        raise ValueError(f"pool must be one of {POOLS}, got {pool!r}")
    return ad.concat_cols(pooled)


def project(h: Tensor, stack: EncoderStack) -> Tensor:
    """Shared projection head; rows come back L2-normalized."""
    if h.shape[1] != stack.rep_width:
        raise ValueError(f"projection expects width {stack.rep_width}, got {h.shape[1]}")
    z = stack.head[0](h)
    z = stack.head[1](ad.relu(z))
    z = stack.head[2](ad.relu(z))
    return ad.l2_normalize_rows(z)


def encode_graph(view: SgnView, stack: EncoderStack) -> Tensor:
    """Graph-level representation H (projection head not applied)."""
    return readout(encode_nodes(view, stack), stack.pool)


# ---------------------------------------------------------------- checkpoint

def _affine_payload(aff: Affine) -> dict:
    return {"w": aff.w.data.tolist(), "b": aff.b.data.tolist(),
            "shape": list(aff.w.shape)}


def _affine_restore(payload: dict) -> Affine:
    w = np.asarray(payload["w"], dtype=np.float64).reshape(payload["shape"])
    b = np.asarray(payload["b"], dtype=np.float64).reshape(1, payload["shape"][1])
    return Affine(ad.parameter(w), ad.parameter(b))


def save_checkpoint(path, stack: EncoderStack, config: dict) -> None:
    """Persist all parameters (with shapes and view-order tags) plus the
    resolved training configuration, as deterministic JSON."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "hidden": stack.hidden,
        "n_layers": stack.n_layers,
        "pool": stack.pool,
        "config": config,
        "views": {
            str(order): {
                "node_width": enc.node_width,
                "edge_width": enc.edge_width,
                "input_proj": _affine_payload(enc.input_proj),
                "layers": [{"mlp1": _affine_payload(l.mlp1),
                            "mlp2": _affine_payload(l.mlp2),
                            "edge_map": _affine_payload(l.edge_map),
                            "epsilon": l.epsilon}
                           for l in enc.layers],
            }
            for order, enc in sorted(stack.encoders.items())
        },
        "head": [_affine_payload(aff) for aff in stack.head],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_checkpoint(path) -> tuple[EncoderStack, dict]:
    """Restore a stack and its training config; validates the envelope."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not a checkpoint file ({exc.msg})") from None
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a checkpoint file (bad format field)")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version "
                         f"{payload.get('version')!r}")
    encoders = {}
    for key, view in payload["views"].items():
        order = int(key)
        layers = [GinLayer(_affine_restore(l["mlp1"]), _affine_restore(l["mlp2"]),
                           _affine_restore(l["edge_map"]), l["epsilon"])
                  for l in view["layers"]]
        encoders[order] = ViewEncoder(order, _affine_restore(view["input_proj"]), layers)
    head = [_affine_restore(a) for a in payload["head"]]
    stack = EncoderStack(payload["hidden"], payload["n_layers"], payload["pool"],
                         encoders, head)
    return stack, payload["config"]


def check_widths(stack: EncoderStack, widths: dict[int, tuple[int, int]]) -> None:
    """Reject a stack whose encoders do not match the dataset's widths."""
    for order, (d, r) in sorted(widths.items()):
        enc = stack.encoders.get(order)
        if enc is None:
            raise ValueError(f"checkpoint has no encoder for view order {order}")
        if (enc.node_width, enc.edge_width) != (d, r):
            raise ValueError(
                f"checkpoint width mismatch for view order {order}: encoder "
                f"expects d={enc.node_width}, r={enc.edge_width}; dataset has "
                f"d={d}, r={r}")
