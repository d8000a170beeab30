"""Composite reward for reasoning threads.

Seven bounded components combine under fixed weights: path length, layer
progression, entity diversity, semantic coherence, relation quality, user
alignment, and target-layer achievement. The same number can be read as
three weighted groups (semantic, user, domain); the grouping identity ties
the two presentations together and is enforced when a config is built.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingProvider, cosine
from .errors import ChainError, ConfigError
from .extraction import UserKnowledgeThread
from .graph import KnowledgeGraph, Layer, normalize_label
from .ontology import Ontology
from .traversal import CROSS_LAYER_PREDICATE, SEMANTIC_PREDICATE, KnowledgeThread

TOLERANCE = 1e-9

# Predicates that carry no relation semantics for the quality component.
GENERIC_PREDICATES = frozenset({"related_to", SEMANTIC_PREDICATE, CROSS_LAYER_PREDICATE})


@dataclass(frozen=True)
class RewardConfig:
    alpha: float = 0.65
    beta: float = 0.10
    gamma: float = 0.25
    weights: tuple[float, ...] = (0.25, 0.20, 0.15, 0.15, 0.10, 0.10, 0.05)
    preferred_length: int = 10
    target_layer: Layer = Layer.TECHNOLOGY

    def __post_init__(self) -> None:
        if len(self.weights) != 7:
            raise ConfigError(f"need exactly 7 weights, got {len(self.weights)}")
        if any(w < 0 for w in self.weights):
            raise ConfigError("weights must be non-negative")
        if abs(sum(self.weights) - 1.0) > TOLERANCE:
            raise ConfigError(f"weights sum to {sum(self.weights)}, expected 1")
        group_sum = self.alpha + self.beta + self.gamma
        if abs(group_sum - 1.0) > TOLERANCE:
            raise ConfigError(f"alpha+beta+gamma = {group_sum}, expected 1")
        w1, w2, w3, w4, w5, w6, w7 = self.weights
        if abs(self.alpha - (w1 + w3 + w4 + w5)) > TOLERANCE:
            raise ConfigError("alpha must equal w1+w3+w4+w5 (grouping identity)")
        if abs(self.beta - w6) > TOLERANCE:
            raise ConfigError("beta must equal w6 (grouping identity)")
        if abs(self.gamma - (w2 + w7)) > TOLERANCE:
            raise ConfigError("gamma must equal w2+w7 (grouping identity)")
        if self.preferred_length < 1:
            raise ConfigError("preferred_length must be at least 1")
        if self.target_layer is Layer.UNKNOWN:
            raise ConfigError("target layer cannot be the unknown sentinel")


@dataclass(frozen=True)
class RewardBreakdown:
    components: tuple[float, ...]  # r1..r7
    total: float
    semantic: float  # R_sem
    user: float  # R_user
    domain: float  # R_dom

    def to_dict(self) -> dict:
        return {
            "components": {f"r{i + 1}": round(c, 9) for i, c in enumerate(self.components)},
            "total": round(self.total, 9),
            "groups": {
                "semantic": round(self.semantic, 9),
                "user": round(self.user, 9),
                "domain": round(self.domain, 9),
            },
        }


@dataclass
class RewardContext:
    """Everything reward evaluation needs, precomputed once per search."""

    graph: KnowledgeGraph
    user_thread: UserKnowledgeThread
    embedder: EmbeddingProvider
    config: RewardConfig = field(default_factory=RewardConfig)
    canonical_predicates: frozenset = frozenset()

    def __post_init__(self) -> None:
        self.user_labels = {normalize_label(e) for e in self.user_thread.entities}
        items = self.user_thread.items()
        self.user_matrix = self.embedder.embed_many(items) if items else None

    def relevance(self, label: str) -> float:
        """Best cosine of a label against the user thread; 0 without a thread."""
        if self.user_matrix is None:
            return 0.0
        return float(np.max(self.user_matrix @ self.embedder.embed(label)))


def make_context(
    graph: KnowledgeGraph,
    user_thread: UserKnowledgeThread,
    embedder: EmbeddingProvider,
    onto: Ontology,
    config: RewardConfig | None = None,
) -> RewardContext:
    return RewardContext(
        graph=graph,
        user_thread=user_thread,
        embedder=embedder,
        config=config or RewardConfig(),
        canonical_predicates=frozenset(onto.canonical_labels),
    )


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def reward(thread: KnowledgeThread, ctx: RewardContext) -> RewardBreakdown:
    """Score a chained path; every component lands in [0, 1].

    Components: r1 length saturation at the preferred length; r2 share of
    walk transitions whose layer ordinal does not decrease (only transitions
    with both ordinals known count, none countable gives 0); r3 distinct
    entities over twice the triple count; r4 mean cosine of consecutive
    triple embeddings (mean of endpoint label vectors), 0 below two triples;
    r5 share of predicates that are informative canonical relations; r6 user
    entity coverage; r7 deepest known layer over 3, or 1 when the target
    layer is reached.
    """
    cfg = ctx.config
    triples = thread.triples
    if not triples:
        raise ChainError("reward needs a non-empty path")
    m = len(triples)
    walk = thread.entity_walk
    g = ctx.graph

    r1 = min(m / cfg.preferred_length, 1.0)

    ordinals = [g.entity(eid).layer.ordinal for eid in walk]
    countable = 0
    forward = 0
    for prev, nxt in zip(ordinals, ordinals[1:]):
        if prev is None or nxt is None:
            continue
        countable += 1
        if nxt >= prev:
            forward += 1
    r2 = forward / countable if countable else 0.0

    distinct = {eid for t in triples for eid in t.endpoints()}
    r3 = _clamp01(len(distinct) / (2 * m))

    if m < 2:
        r4 = 0.0
    else:
        vecs = []
        for t in triples:
            s_vec = ctx.embedder.embed(g.entity(t.subject).label)
            o_vec = ctx.embedder.embed(g.entity(t.object).label)
            vecs.append((s_vec + o_vec) / 2.0)
        sims = [cosine(vecs[i], vecs[i + 1]) for i in range(len(vecs) - 1)]
        r4 = _clamp01(float(np.mean(sims)))

    informative = sum(
        1
        for t in triples
        if t.predicate in ctx.canonical_predicates and t.predicate not in GENERIC_PREDICATES
    )
    r5 = informative / m

    walk_labels = {g.entity(eid).label for eid in walk}
    overlap = len(walk_labels & ctx.user_labels)
    r6 = overlap / max(1, len(ctx.user_labels))

    known = [o for o in ordinals if o is not None]
    target_hit = any(
        g.entity(eid).layer is cfg.target_layer for eid in walk
    )
    if target_hit:
        r7 = 1.0
    elif known:
        r7 = max(known) / 3.0
    else:
        r7 = 0.0

    components = (r1, r2, r3, r4, r5, r6, r7)
    w = cfg.weights
    total = sum(wi * ri for wi, ri in zip(w, components))
    semantic = (w[0] * r1 + w[2] * r3 + w[3] * r4 + w[4] * r5) / cfg.alpha
    user = r6
    domain = (w[1] * r2 + w[6] * r7) / cfg.gamma
    return RewardBreakdown(
        components=components, total=total, semantic=semantic, user=user, domain=domain
    )


def grouped_total(breakdown: RewardBreakdown, cfg: RewardConfig) -> float:
    """Recombine the three groups; equals the seven-component total."""
    return (
        cfg.alpha * breakdown.semantic
        + cfg.beta * breakdown.user
        + cfg.gamma * breakdown.domain
    )
