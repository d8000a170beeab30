"""Message-passing encoder: forward oracle, equivariance, and persistence."""

from __future__ import annotations

import numpy as np
import pytest

from kgthreads.embeddings import OfflineEmbedder
from kgthreads.errors import DimensionMismatchError, GraphFormatError
from kgthreads.gnn import (
    GnnModel,
    encode,
    forward,
    init_model,
    load_model,
    node_features,
    save_model,
)
from kgthreads.graph import Entity, KnowledgeGraph, Layer, Triple

from conftest import build_random_graph


def tiny_model(seed=0, heads=2, dim=8):
    return init_model(seed=seed, input_dim=dim, hidden_dim=dim, heads=heads)


def reference_forward(model, g, features):
    """Independent per-node reimplementation of the documented forward pass."""
    ids = sorted(g.entities)
    in_nbrs = {eid: sorted(g.in_neighbor_ids(eid)) for eid in ids}
    x = {eid: np.asarray(features[eid], dtype=float) for eid in ids}

    def leaky(v):
        return v if v >= 0.0 else 0.2 * v

    def attention(layer, current):
        out = {}
        for eid in ids:
            sources = in_nbrs[eid] + [eid]
            per_head = []
            for w, a_dst, a_src in zip(layer.weights, layer.attn_dst, layer.attn_src):
                z = {sid: w @ current[sid] for sid in set(sources)}
                own = w @ current[eid]
                raw = [leaky(float(a_dst @ own) + float(a_src @ z[sid])) for sid in sources]
                shifted = np.array(raw) - max(raw)
                weights = np.exp(shifted)
                weights /= weights.sum()
                per_head.append(sum(wgt * z[sid] for wgt, sid in zip(weights, sources)))
            out[eid] = np.mean(per_head, axis=0)
        return out

    def convolution(layer, current):
        out = {}
        for eid in ids:
            vec = layer.w_self @ current[eid]
            for nid in in_nbrs[eid]:
                vec = vec + layer.w_neigh @ current[nid]
            out[eid] = vec
        return out

    x = attention(model.layers[0], x)
    x = {eid: np.maximum(v, 0.0) for eid, v in x.items()}
    x = convolution(model.layers[1], x)
    x = {eid: np.maximum(v, 0.0) for eid, v in x.items()}
    x = attention(model.layers[2], x)
    return {eid: v / (np.linalg.norm(v) + 1e-10) for eid, v in x.items()}


def three_node_graph():
    return KnowledgeGraph(
        [
            Entity("a", "alert service", Layer.SYSTEM),
            Entity("b", "message broker", Layer.TECHNOLOGY),
            Entity("c", "care goal", Layer.BUSINESS),
        ],
        [Triple("a", "uses", "b"), Triple("c", "requires", "b")],
    )


def test_forward_matches_reference_on_three_nodes():
    model = tiny_model()
    g = three_node_graph()
    embedder = OfflineEmbedder(dimension=8)
    features = node_features(g, embedder)
    got = forward(model, g, features)
    want = reference_forward(model, g, features)
    for eid in got:
        np.testing.assert_allclose(got[eid], want[eid], atol=1e-9)


def test_forward_matches_reference_on_random_graphs():
    embedder = OfflineEmbedder(dimension=8)
    for seed in range(20):
        g = build_random_graph(seed, n_nodes=4 + seed % 12, n_edges=6 + seed % 10)
        model = tiny_model(seed=seed % 3)
        features = node_features(g, embedder)
        got = forward(model, g, features)
        want = reference_forward(model, g, features)
        for eid in got:
            np.testing.assert_allclose(got[eid], want[eid], atol=1e-6)


def test_outputs_are_unit_norm():
    embedder = OfflineEmbedder(dimension=8)
    g = build_random_graph(5, n_nodes=10, n_edges=14)
    vectors = encode(g, embedder, tiny_model())
    for vec in vectors.values():
        assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-6)


def test_relabeling_nodes_is_an_equivariance():
    embedder = OfflineEmbedder(dimension=8)
    model = tiny_model()
    for seed in range(20):
        g = build_random_graph(seed, n_nodes=6 + seed % 10, n_edges=9 + seed % 8)
        # Reverse the lexicographic processing order by renaming every id.
        n = g.entity_count
        rename = {f"n{i}": f"m{n - 1 - i:03d}" for i in range(n)}
        permuted = KnowledgeGraph(
            [
                Entity(rename[e.id], e.label, e.layer)
                for e in g.entities.values()
            ],
            [Triple(rename[t.subject], t.predicate, rename[t.object]) for t in g.triples],
        )
        base = forward(model, g, node_features(g, embedder))
        moved = forward(model, permuted, node_features(permuted, embedder))
        for eid, vec in base.items():
            np.testing.assert_allclose(moved[rename[eid]], vec, atol=1e-6)


def test_isolated_node_closed_form():
    model = tiny_model(heads=1)
    g = KnowledgeGraph([Entity("solo", "alert service", Layer.SYSTEM)], [])
    embedder = OfflineEmbedder(dimension=8)
    feat = node_features(g, embedder)["solo"]
    # With no in-neighbors every attention softmax is a singleton, so the
    # stack collapses to plain matrix products.
    h = np.maximum(model.layers[0].weights[0] @ feat, 0.0)
    h = np.maximum(model.layers[1].w_self @ h, 0.0)
    h = model.layers[2].weights[0] @ h
    h = h / (np.linalg.norm(h) + 1e-10)
    got = forward(model, g, node_features(g, embedder))["solo"]
    np.testing.assert_allclose(got, h, atol=1e-9)


def test_empty_graph_encodes_to_empty_dict():
    embedder = OfflineEmbedder(dimension=8)
    assert forward(tiny_model(), KnowledgeGraph([], []), {}) == {}


def test_same_seed_reproduces_weights():
    a, b = tiny_model(seed=42), tiny_model(seed=42)
    np.testing.assert_array_equal(a.layers[0].weights[0], b.layers[0].weights[0])
    np.testing.assert_array_equal(a.layers[1].w_neigh, b.layers[1].w_neigh)
    c = tiny_model(seed=43)
    assert not np.array_equal(a.layers[0].weights[0], c.layers[0].weights[0])


def test_save_load_round_trip(tmp_path):
    model = tiny_model(seed=9)
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.input_dim == model.input_dim
    assert loaded.heads == model.heads
    assert loaded.seed == 9
    g = three_node_graph()
    embedder = OfflineEmbedder(dimension=8)
    features = node_features(g, embedder)
    got = forward(loaded, g, features)
    want = forward(model, g, features)
    for eid in got:
        np.testing.assert_allclose(got[eid], want[eid], atol=0)


def test_load_model_rejects_bad_files(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{}", encoding="utf-8")
    with pytest.raises(GraphFormatError):
        load_model(path)
    path.write_text('{"header": {"layer_order": ["convolution"]}}', encoding="utf-8")
    with pytest.raises(GraphFormatError):
        load_model(path)


def test_model_validation_rejects_wrong_shapes():
    model = tiny_model()
    with pytest.raises(GraphFormatError):
        GnnModel(
            input_dim=8,
            hidden_dim=8,
            heads=3,  # layers carry 2 heads
            seed=0,
            dropout=0.2,
            layers=model.layers,
        )
    with pytest.raises(GraphFormatError):
        GnnModel(
            input_dim=8,
            hidden_dim=8,
            heads=2,
            seed=0,
            dropout=0.2,
            layers=model.layers[:2],
        )


def test_forward_rejects_missing_or_misshapen_features():
    model = tiny_model()
    g = three_node_graph()
    embedder = OfflineEmbedder(dimension=8)
    features = node_features(g, embedder)
    incomplete = {k: v for k, v in features.items() if k != "b"}
    with pytest.raises(DimensionMismatchError):
        forward(model, g, incomplete)
    wrong_dim = {k: np.ones(5) for k in features}
    with pytest.raises(DimensionMismatchError):
        forward(model, g, wrong_dim)


def test_encode_defaults_to_seed_zero_model():
    g = three_node_graph()
    embedder = OfflineEmbedder()
    default = encode(g, embedder)
    explicit = encode(g, embedder, init_model(seed=0, input_dim=embedder.dimension))
    for eid in default:
        np.testing.assert_array_equal(default[eid], explicit[eid])
