"""Relevance pruning: cut the domain graph down to the user's neighborhood.

Every graph entity gets a relevance score against the user knowledge thread
(best cosine against any thread entity label or verbalized triple). Entities
above the threshold form the core; the retained subgraph is the core plus
everything within a fixed undirected hop distance of it, so near-miss
neighbors survive for the later enrichment and traversal stages. User
entities missing from the graph are injected as unclassified nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingProvider
from .extraction import UserKnowledgeThread
from .graph import Entity, KnowledgeGraph, Layer, normalize_label

# Hash-token embeddings score true matches lower than a trained encoder
# would, so the threshold drops when the deterministic provider is active.
DEFAULT_THRESHOLD = 0.85
OFFLINE_THRESHOLD = 0.35


@dataclass(frozen=True)
class PruneConfig:
    """Knobs for the relevance pruning stage.

    threshold ``None`` resolves per provider: 0.85 normally, 0.35 for the
    deterministic offline embedder. ``max_retained`` of 0 means unlimited.
    """

    threshold: float | None = None
    hops: int = 3
    max_retained: int = 0

    def __post_init__(self) -> None:
        if self.threshold is not None and not -1.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [-1, 1], got {self.threshold}")
        if self.hops < 0:
            raise ValueError(f"hops must be non-negative, got {self.hops}")
        if self.max_retained < 0:
            raise ValueError(f"max_retained must be non-negative, got {self.max_retained}")

    def resolve_threshold(self, embedder: EmbeddingProvider) -> float:
        if self.threshold is not None:
            return self.threshold
        return OFFLINE_THRESHOLD if embedder.deterministic else DEFAULT_THRESHOLD


@dataclass
class PruneResult:
    graph: KnowledgeGraph
    scores: dict[str, float]
    core_ids: set[str] = field(default_factory=set)
    injected_ids: set[str] = field(default_factory=set)
    threshold: float = 0.0

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "core": sorted(self.core_ids),
            "injected": sorted(self.injected_ids),
            "retained": self.graph.entity_count,
            "scores": {k: round(v, 6) for k, v in sorted(self.scores.items())},
        }


def _thread_matrix(
    thread: UserKnowledgeThread, embedder: EmbeddingProvider
) -> np.ndarray | None:
    items = thread.items()
    if not items:
        return None
    return embedder.embed_many(items)


def score_entity(
    label: str, thread: UserKnowledgeThread, embedder: EmbeddingProvider
) -> float:
    """Best cosine between the entity label and any thread item."""
    matrix = _thread_matrix(thread, embedder)
    if matrix is None:
        return 0.0
    vec = embedder.embed(label)
    return float(np.max(matrix @ vec))


def score_entities(
    graph: KnowledgeGraph, thread: UserKnowledgeThread, embedder: EmbeddingProvider
) -> dict[str, float]:
    """Relevance score for every entity, computed in one matrix product."""
    ids = sorted(graph.entities)
    if not ids:
        return {}
    matrix = _thread_matrix(thread, embedder)
    if matrix is None:
        return {eid: 0.0 for eid in ids}
    labels = [graph.entity(eid).label for eid in ids]
    entity_matrix = embedder.embed_many(labels)
    sims = entity_matrix @ matrix.T  # rows: entities, cols: thread items
    best = sims.max(axis=1)
    return {eid: float(s) for eid, s in zip(ids, best)}


def prune(
    graph: KnowledgeGraph,
    thread: UserKnowledgeThread,
    embedder: EmbeddingProvider,
    config: PruneConfig | None = None,
) -> PruneResult:
    """Score, threshold, expand by hops, and inject missing user entities.

    Core membership requires a score strictly above the threshold. The
    retained set is the core plus all entities within ``config.hops``
    undirected hops of any core entity; edges are induced. When
    ``max_retained`` is positive and the expansion overshoots it, retained
    non-core entities are dropped in ascending score order (ties broken by
    id) until the cap holds; core entities are never dropped.
    """
    config = config or PruneConfig()
    threshold = config.resolve_threshold(embedder)
    scores = score_entities(graph, thread, embedder)
    core = {eid for eid, s in scores.items() if s > threshold}

    retained = set(core)
    frontier = set(core)
    for _ in range(config.hops):
        if not frontier:
            break
        nxt: set[str] = set()
        for eid in frontier:
            for nid in graph.neighbor_ids(eid):
                if nid not in retained:
                    nxt.add(nid)
        retained |= nxt
        frontier = nxt

    if 0 < config.max_retained < len(retained):
        droppable = sorted(
            (eid for eid in retained if eid not in core),
            key=lambda eid: (scores[eid], eid),
        )
        excess = len(retained) - config.max_retained
        retained -= set(droppable[:excess])

    kept = graph.induced_subgraph(retained)

    # User-thread entities absent from the retained graph come along as raw
    # nodes so later stages can anchor on them.
    present_labels = {kept.entity(eid).label for eid in kept.entities}
    injected: set[str] = set()
    new_entities = []
    for label in sorted(thread.entities):
        norm = normalize_label(label)
        if not norm or norm in present_labels:
            continue
        eid = f"user:{norm.replace(' ', '_')}"
        if kept.has_entity(eid):
            continue
        new_entities.append(
            Entity(id=eid, label=norm, layer=Layer.UNKNOWN, provenance="user")
        )
        injected.add(eid)
    if new_entities:
        kept = kept.with_additions(entities=new_entities)

    return PruneResult(
        graph=kept,
        scores=scores,
        core_ids=core,
        injected_ids=injected,
        threshold=threshold,
    )
