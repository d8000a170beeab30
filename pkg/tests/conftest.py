"""Shared fixtures: providers, ontology, desk assets, random graph builders."""

from __future__ import annotations

import random

import pytest

from kgthreads.config import default_graph_path
from kgthreads.embeddings import OfflineEmbedder
from kgthreads.extraction import UserKnowledgeThread
from kgthreads.graph import Entity, KnowledgeGraph, Layer, Triple, load_graph
from kgthreads.ontology import load_ontology

LAYER_CYCLE = (Layer.BUSINESS, Layer.SYSTEM, Layer.DATA, Layer.TECHNOLOGY)

# Small label vocabulary so random graphs share tokens with random threads.
VOCAB = (
    "alert service", "reminder module", "sensor stream", "dose record",
    "billing queue", "patient profile", "audit log", "speaker unit",
    "message broker", "care goal", "inventory snapshot", "training plan",
    "alert gateway", "data pipeline", "dashboard view", "backup archive",
    "weight sensor", "schedule table", "sync daemon", "token store",
)


@pytest.fixture(scope="session")
def embedder():
    return OfflineEmbedder()


@pytest.fixture(scope="session")
def onto():
    return load_ontology()


@pytest.fixture(scope="session")
def desk_graph():
    return load_graph(default_graph_path())


def build_random_graph(
    seed: int, n_nodes: int, n_edges: int, predicates=("uses", "stores", "monitors")
) -> KnowledgeGraph:
    """Connected-ish random layered graph with vocabulary-derived labels."""
    rng = random.Random(seed)
    entities = []
    for i in range(n_nodes):
        base = VOCAB[i % len(VOCAB)]
        label = base if i < len(VOCAB) else f"{base} {i}"
        entities.append(
            Entity(id=f"n{i}", label=label, layer=LAYER_CYCLE[rng.randrange(4)])
        )
    triples = []
    seen = set()
    # Spanning tree first, then random extras.
    order = list(range(n_nodes))
    rng.shuffle(order)
    for i in range(1, n_nodes):
        if len(triples) >= n_edges:
            break
        a, b = order[i], order[rng.randrange(i)]
        if rng.random() < 0.5:
            a, b = b, a
        pair = frozenset((a, b))
        seen.add(pair)
        triples.append(
            Triple(f"n{a}", predicates[rng.randrange(len(predicates))], f"n{b}")
        )
    guard = 0
    while len(triples) < n_edges and guard < n_edges * 50:
        guard += 1
        a, b = rng.randrange(n_nodes), rng.randrange(n_nodes)
        pair = frozenset((a, b))
        if a == b or pair in seen:
            continue
        seen.add(pair)
        triples.append(
            Triple(f"n{a}", predicates[rng.randrange(len(predicates))], f"n{b}")
        )
    return KnowledgeGraph(entities, triples)


def build_thread(seed: int, k: int = 3) -> UserKnowledgeThread:
    """User thread whose entities come from the shared vocabulary."""
    rng = random.Random(seed)
    picks = rng.sample(VOCAB, k)
    return UserKnowledgeThread(triples=[], entities=set(picks), context_terms=set())
