"""Three-layer message-passing encoder producing contextual node vectors.

The stack is attention → convolution → attention with a rectifier between
layers and L2 output normalization. There is no training loop: weights come
from a model file, or from a seeded Glorot-uniform initialization when no
file is given. Dropout only exists as a recorded training-time field; the
forward pass never applies it.

Weight draw order for a fresh model (one ``numpy.random.default_rng(seed)``
consumed in sequence): for each attention layer, per head, the projection
matrix (out × in), then the destination attention vector, then the source
attention vector; the convolution layer draws the self matrix, then the
neighbor matrix. All draws are Glorot-uniform over (fan_in, fan_out); for
attention vectors fan_in is the head width and fan_out is 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import NORM_EPS, EmbeddingProvider
from .errors import DimensionMismatchError, GraphFormatError
from .graph import KnowledgeGraph

LEAKY_SLOPE = 0.2
LAYER_ORDER = ("attention", "convolution", "attention")

DEFAULT_INPUT_DIM = 384
DEFAULT_HIDDEN_DIM = 128
DEFAULT_HEADS = 4
DEFAULT_DROPOUT = 0.2


def _leaky(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0.0, x, LEAKY_SLOPE * x)


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape: tuple) -> np.ndarray:
    limit = float(np.sqrt(6.0 / (fan_in + fan_out)))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class AttentionLayer:
    """Multi-head attention over each node's in-neighbors plus itself."""

    weights: list[np.ndarray]  # per head: (out_dim, in_dim)
    attn_dst: list[np.ndarray]  # per head: (out_dim,) applied to the node itself
    attn_src: list[np.ndarray]  # per head: (out_dim,) applied to the message source

    def forward(self, x: np.ndarray, sources: list[np.ndarray]) -> np.ndarray:
        head_outputs = []
        for w, a_dst, a_src in zip(self.weights, self.attn_dst, self.attn_src):
            z = x @ w.T  # (n, out_dim)
            dst_score = z @ a_dst
            src_score = z @ a_src
            out = np.empty_like(z)
            for i, src_ids in enumerate(sources):
                scores = _leaky(dst_score[i] + src_score[src_ids])
                scores -= scores.max()
                weights_ = np.exp(scores)
                weights_ /= weights_.sum()
                out[i] = weights_ @ z[src_ids]
            head_outputs.append(out)
        return np.mean(head_outputs, axis=0)


@dataclass
class ConvolutionLayer:
    """x'_i = W_self x_i + W_neigh * sum of in-neighbor features."""

    w_self: np.ndarray
    w_neigh: np.ndarray

    def forward(self, x: np.ndarray, in_neighbors: list[np.ndarray]) -> np.ndarray:
        out = x @ self.w_self.T
        for i, nbr_ids in enumerate(in_neighbors):
            if len(nbr_ids):
                out[i] += self.w_neigh @ x[nbr_ids].sum(axis=0)
        return out


@dataclass
class GnnModel:
    input_dim: int
    hidden_dim: int
    heads: int
    seed: int
    dropout: float
    layers: tuple

    def __post_init__(self) -> None:
        if len(self.layers) != len(LAYER_ORDER):
            raise GraphFormatError(
                f"model must have {len(LAYER_ORDER)} layers, got {len(self.layers)}"
            )
        expected_in = self.input_dim
        for idx, (kind, layer) in enumerate(zip(LAYER_ORDER, self.layers)):
            if kind == "attention":
                if not isinstance(layer, AttentionLayer) or len(layer.weights) != self.heads:
                    raise GraphFormatError(f"layer {idx}: expected {self.heads}-head attention")
                shape = layer.weights[0].shape
                if shape != (self.hidden_dim, expected_in):
                    raise GraphFormatError(
                        f"layer {idx}: weight shape {shape}, "
                        f"expected {(self.hidden_dim, expected_in)}"
                    )
            else:
                if not isinstance(layer, ConvolutionLayer):
                    raise GraphFormatError(f"layer {idx}: expected a convolution layer")
                if layer.w_self.shape != (self.hidden_dim, expected_in):
                    raise GraphFormatError(
                        f"layer {idx}: self-weight shape {layer.w_self.shape}, "
                        f"expected {(self.hidden_dim, expected_in)}"
                    )
            expected_in = self.hidden_dim


def init_model(
    seed: int = 0,
    input_dim: int = DEFAULT_INPUT_DIM,
    hidden_dim: int = DEFAULT_HIDDEN_DIM,
    heads: int = DEFAULT_HEADS,
    dropout: float = DEFAULT_DROPOUT,
) -> GnnModel:
    """Fresh Glorot-uniform model; the draw order is documented at module top."""
    rng = np.random.default_rng(seed)

    def attention(in_dim: int) -> AttentionLayer:
        weights, attn_dst, attn_src = [], [], []
        for _ in range(heads):
            weights.append(_glorot(rng, in_dim, hidden_dim, (hidden_dim, in_dim)))
            attn_dst.append(_glorot(rng, hidden_dim, 1, (hidden_dim,)))
            attn_src.append(_glorot(rng, hidden_dim, 1, (hidden_dim,)))
        return AttentionLayer(weights, attn_dst, attn_src)

    def convolution(in_dim: int) -> ConvolutionLayer:
        return ConvolutionLayer(
            w_self=_glorot(rng, in_dim, hidden_dim, (hidden_dim, in_dim)),
            w_neigh=_glorot(rng, in_dim, hidden_dim, (hidden_dim, in_dim)),
        )

    layers = (attention(input_dim), convolution(hidden_dim), attention(hidden_dim))
    return GnnModel(
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        heads=heads,
        seed=seed,
        dropout=dropout,
        layers=layers,
    )


def save_model(model: GnnModel, path: str | Path) -> None:
    """JSON weight container with a self-describing header."""
    payload: dict = {
        "header": {
            "dimensions": {"input": model.input_dim, "hidden": model.hidden_dim},
            "heads": model.heads,
            "layer_order": list(LAYER_ORDER),
            "seed": model.seed,
            "dropout": model.dropout,
        },
        "layers": [],
    }
    for kind, layer in zip(LAYER_ORDER, model.layers):
        if kind == "attention":
            payload["layers"].append(
                {
                    "kind": "attention",
                    "weights": [w.tolist() for w in layer.weights],
                    "attn_dst": [a.tolist() for a in layer.attn_dst],
                    "attn_src": [a.tolist() for a in layer.attn_src],
                }
            )
        else:
            payload["layers"].append(
                {
                    "kind": "convolution",
                    "w_self": layer.w_self.tolist(),
                    "w_neigh": layer.w_neigh.tolist(),
                }
            )
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> GnnModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        header = payload["header"]
        if list(header["layer_order"]) != list(LAYER_ORDER):
            raise GraphFormatError(f"unsupported layer order {header['layer_order']}")
        layers = []
        for record in payload["layers"]:
            if record["kind"] == "attention":
                layers.append(
                    AttentionLayer(
                        weights=[np.asarray(w, dtype=float) for w in record["weights"]],
                        attn_dst=[np.asarray(a, dtype=float) for a in record["attn_dst"]],
                        attn_src=[np.asarray(a, dtype=float) for a in record["attn_src"]],
                    )
                )
            else:
                layers.append(
                    ConvolutionLayer(
                        w_self=np.asarray(record["w_self"], dtype=float),
                        w_neigh=np.asarray(record["w_neigh"], dtype=float),
                    )
                )
        return GnnModel(
            input_dim=int(header["dimensions"]["input"]),
            hidden_dim=int(header["dimensions"]["hidden"]),
            heads=int(header["heads"]),
            seed=int(header["seed"]),
            dropout=float(header["dropout"]),
            layers=tuple(layers),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise GraphFormatError(f"bad model file {path}: {exc}") from exc


def _index_graph(g: KnowledgeGraph) -> tuple[list[str], list[np.ndarray]]:
    """Stable node order plus per-node in-neighbor index arrays."""
    ids = sorted(g.entities)
    pos = {eid: i for i, eid in enumerate(ids)}
    in_neighbors = [
        np.array(sorted(pos[n] for n in g.in_neighbor_ids(eid)), dtype=int)
        for eid in ids
    ]
    return ids, in_neighbors


def forward(
    model: GnnModel, g: KnowledgeGraph, features: dict[str, np.ndarray]
) -> dict[str, np.ndarray]:
    """Run the stack; returns unit-norm hidden vectors keyed by entity id.

    Attention layers aggregate over in-neighbors plus self; the convolution
    layer keeps only the self term for nodes with no in-neighbors.
    """
    ids, in_neighbors = _index_graph(g)
    if not ids:
        return {}
    missing = [eid for eid in ids if eid not in features]
    if missing:
        raise DimensionMismatchError(f"features missing for nodes: {missing[:5]}")
    x = np.stack([np.asarray(features[eid], dtype=float) for eid in ids])
    if x.shape[1] != model.input_dim:
        raise DimensionMismatchError(
            f"feature dim {x.shape[1]} != model input dim {model.input_dim}"
        )
    with_self = [np.append(nbrs, i) for i, nbrs in enumerate(in_neighbors)]

    for idx, (kind, layer) in enumerate(zip(LAYER_ORDER, model.layers)):
        if kind == "attention":
            x = layer.forward(x, with_self)
        else:
            x = layer.forward(x, in_neighbors)
        if idx < len(model.layers) - 1:
            x = _relu(x)
    norms = np.linalg.norm(x, axis=1, keepdims=True) + NORM_EPS
    x = x / norms
    return {eid: x[i] for i, eid in enumerate(ids)}


def node_features(g: KnowledgeGraph, embedder: EmbeddingProvider) -> dict[str, np.ndarray]:
    """Entity-label embeddings as input features."""
    ids = sorted(g.entities)
    if not ids:
        return {}
    labels = [g.entity(eid).label for eid in ids]
    matrix = embedder.embed_many(labels)
    return {eid: matrix[i] for i, eid in enumerate(ids)}


def encode(
    g: KnowledgeGraph, embedder: EmbeddingProvider, model: GnnModel | None = None
) -> dict[str, np.ndarray]:
    """Features + forward in one call; a fresh seeded model when none given."""
    if model is None:
        model = init_model(seed=0, input_dim=embedder.dimension)
    return forward(model, g, node_features(g, embedder))
