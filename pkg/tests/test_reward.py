"""Composite path reward: hand arithmetic, bounds, and the grouping identity."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgthreads.embeddings import OfflineEmbedder, cosine
from kgthreads.errors import ChainError, ConfigError
from kgthreads.extraction import UserKnowledgeThread
from kgthreads.graph import Entity, KnowledgeGraph, Layer, Triple
from kgthreads.reward import (
    RewardConfig,
    grouped_total,
    make_context,
    reward,
)
from kgthreads.traversal import form_threads, thread_from_walk

from conftest import build_random_graph, build_thread


@pytest.fixture(scope="module")
def ladder_graph():
    """business -> system -> data -> technology chain plus one extra edge."""
    return KnowledgeGraph(
        [
            Entity("bg", "care goal", Layer.BUSINESS),
            Entity("sv", "alert service", Layer.SYSTEM),
            Entity("dr", "dose record", Layer.DATA),
            Entity("tk", "message broker", Layer.TECHNOLOGY),
        ],
        [
            Triple("bg", "requires", "sv"),
            Triple("sv", "stores", "dr"),
            Triple("dr", "related_to", "tk"),
        ],
    )


def test_reward_matches_hand_arithmetic(ladder_graph, onto, embedder):
    g = ladder_graph
    user = UserKnowledgeThread(entities={"care goal", "pill box"})
    ctx = make_context(g, user, embedder, onto)
    th = thread_from_walk(g, tuple(g.triples), ("bg", "sv", "dr", "tk"))
    got = reward(th, ctx)

    r1 = 3 / 10  # three triples against the preferred length of ten
    r2 = 1.0  # every transition advances the layer ordinal
    r3 = 4 / 6  # four distinct entities over twice the triple count
    emb = embedder.embed
    v1 = (emb("care goal") + emb("alert service")) / 2
    v2 = (emb("alert service") + emb("dose record")) / 2
    v3 = (emb("dose record") + emb("message broker")) / 2
    r4 = (cosine(v1, v2) + cosine(v2, v3)) / 2
    r5 = 2 / 3  # "related_to" is generic
    r6 = 1 / 2  # one of the two user entities on the walk
    r7 = 1.0  # the technology target layer is reached

    expected = (r1, r2, r3, r4, r5, r6, r7)
    for got_c, want_c in zip(got.components, expected):
        assert got_c == pytest.approx(want_c, abs=1e-9)
    w = RewardConfig().weights
    assert got.total == pytest.approx(
        sum(wi * ri for wi, ri in zip(w, expected)), abs=1e-9
    )


def test_single_triple_path_edge_values(ladder_graph, onto, embedder):
    g = ladder_graph
    ctx = make_context(g, UserKnowledgeThread(), embedder, onto)
    th = thread_from_walk(g, (g.triples[0],), ("bg", "sv"))
    got = reward(th, ctx)
    r1, r2, r3, r4, r5, r6, r7 = got.components
    assert r1 == pytest.approx(0.1)
    assert r2 == 1.0
    assert r3 == 1.0
    assert r4 == 0.0  # below two triples there is no consecutive pair
    assert r5 == 1.0
    assert r6 == 0.0  # empty user thread
    assert r7 == pytest.approx(1 / 3)  # deepest known layer is system


def test_unknown_layers_are_excluded_from_progression(onto, embedder):
    g = KnowledgeGraph(
        [
            Entity("a", "alpha", Layer.UNKNOWN),
            Entity("b", "beta", Layer.UNKNOWN),
        ],
        [Triple("a", "uses", "b")],
    )
    ctx = make_context(g, UserKnowledgeThread(), embedder, onto)
    th = thread_from_walk(g, tuple(g.triples), ("a", "b"))
    got = reward(th, ctx)
    assert got.components[1] == 0.0  # no countable transitions
    assert got.components[6] == 0.0  # no known layer at all


def test_backward_layer_transitions_lower_progression(onto, embedder):
    g = KnowledgeGraph(
        [
            Entity("t", "tech node", Layer.TECHNOLOGY),
            Entity("b", "biz node", Layer.BUSINESS),
            Entity("s", "sys node", Layer.SYSTEM),
        ],
        [Triple("t", "uses", "b"), Triple("b", "uses", "s")],
    )
    ctx = make_context(g, UserKnowledgeThread(), embedder, onto)
    th = thread_from_walk(g, tuple(g.triples), ("t", "b", "s"))
    assert reward(th, ctx).components[1] == pytest.approx(0.5)


def test_reward_rejects_empty_path(ladder_graph, onto, embedder):
    ctx = make_context(ladder_graph, UserKnowledgeThread(), embedder, onto)
    broken = thread_from_walk(ladder_graph, (ladder_graph.triples[0],), ("bg", "sv"))
    object.__setattr__(broken, "triples", ())
    with pytest.raises(ChainError):
        reward(broken, ctx)


def test_grouping_identity_on_sampled_paths(onto):
    embedder = OfflineEmbedder()
    checked = 0
    for seed in range(40):
        g = build_random_graph(seed, n_nodes=10, n_edges=14)
        user = build_thread(seed, k=3)
        ctx = make_context(g, user, embedder, onto)
        from kgthreads.gnn import node_features

        threads = form_threads(g, user, node_features(g, embedder), max_len=5, beam=6)
        for th in threads[:8]:
            got = reward(th, ctx)
            for c in got.components:
                assert 0.0 <= c <= 1.0
            assert 0.0 <= got.total <= 1.0
            assert abs(grouped_total(got, ctx.config) - got.total) < 1e-9
            checked += 1
    assert checked >= 25


def test_reward_is_deterministic(ladder_graph, onto, embedder):
    ctx = make_context(ladder_graph, UserKnowledgeThread(entities={"care goal"}), embedder, onto)
    th = thread_from_walk(ladder_graph, tuple(ladder_graph.triples), ("bg", "sv", "dr", "tk"))
    first = reward(th, ctx)
    second = reward(th, ctx)
    assert first.components == second.components
    assert first.total == second.total


def test_breakdown_to_dict_shape(ladder_graph, onto, embedder):
    ctx = make_context(ladder_graph, UserKnowledgeThread(), embedder, onto)
    th = thread_from_walk(ladder_graph, (ladder_graph.triples[0],), ("bg", "sv"))
    doc = reward(th, ctx).to_dict()
    assert set(doc) == {"components", "total", "groups"}
    assert set(doc["components"]) == {f"r{i}" for i in range(1, 8)}
    assert set(doc["groups"]) == {"semantic", "user", "domain"}


def test_config_grouping_identity_is_enforced():
    with pytest.raises(ConfigError):
        RewardConfig(alpha=0.5, beta=0.25, gamma=0.25)
    with pytest.raises(ConfigError):
        RewardConfig(weights=(0.5, 0.2, 0.1, 0.1, 0.1, 0.0, 0.0))
    with pytest.raises(ConfigError):
        RewardConfig(weights=(0.25, 0.20, 0.15, 0.15, 0.10, 0.10))
    with pytest.raises(ConfigError):
        RewardConfig(preferred_length=0)
    with pytest.raises(ConfigError):
        RewardConfig(target_layer=Layer.UNKNOWN)


def test_config_accepts_consistent_regrouping():
    cfg = RewardConfig(
        alpha=0.60,
        beta=0.15,
        gamma=0.25,
        weights=(0.20, 0.20, 0.15, 0.15, 0.10, 0.15, 0.05),
    )
    assert cfg.alpha == 0.60


@settings(max_examples=30)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=1, max_value=4))
def test_components_always_bounded(seed, max_len):
    embedder = OfflineEmbedder()
    from kgthreads.gnn import node_features
    from kgthreads.ontology import load_ontology

    onto = load_ontology()
    g = build_random_graph(seed, n_nodes=8, n_edges=11)
    user = build_thread(seed % 97, k=2)
    ctx = make_context(g, user, embedder, onto)
    for th in form_threads(g, user, node_features(g, embedder), max_len=max_len, beam=3)[:5]:
        got = reward(th, ctx)
        assert all(0.0 <= c <= 1.0 for c in got.components)
        assert abs(grouped_total(got, ctx.config) - got.total) < 1e-9
