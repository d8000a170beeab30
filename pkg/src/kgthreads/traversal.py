"""Link proposal over encoder outputs and beam-searched thread formation.

``propose_links`` turns pairwise similarity of the contextual node vectors
into new graph edges under three threshold classes (same-layer direct,
same-layer via a short bridge, cross-layer), with global per-cycle caps.
``form_threads`` then walks the augmented graph from the user's anchor
entities and keeps the best-scoring simple paths as candidate threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .embeddings import cosine
from .errors import ChainError
from .graph import KnowledgeGraph, Layer, Triple, normalize_label
from .extraction import UserKnowledgeThread

SEMANTIC_PREDICATE = "semantically_linked"
CROSS_LAYER_PREDICATE = "cross_layer_link"

LAYER_ADVANCE_BONUS = 0.1


@dataclass(frozen=True)
class LinkProposalConfig:
    top_k: int = 5
    direct_threshold: float = 0.6  # same layer, immediate accept
    bridged_threshold: float = 0.4  # same layer, needs a <=2-hop bridge
    max_bridge_hops: int = 2
    cross_layer_threshold: float = 0.55
    max_semantic: int = 20
    max_cross_layer: int = 15

    def __post_init__(self) -> None:
        for name in ("direct_threshold", "bridged_threshold", "cross_layer_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.01:
                raise ValueError(f"{name} must lie in [0, 1.01], got {value}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be at least 1, got {self.top_k}")
        if self.max_semantic < 0 or self.max_cross_layer < 0:
            raise ValueError("caps must be non-negative")


@dataclass
class KnowledgeThread:
    """A chained walk of triples with the node sequence that produced it."""

    triples: tuple[Triple, ...]
    entity_walk: tuple[str, ...]
    layers: tuple[Layer, ...]
    score: float | None = None

    def __post_init__(self) -> None:
        if not self.triples:
            raise ChainError("a knowledge thread needs at least one triple")
        if len(self.entity_walk) != len(self.triples) + 1:
            raise ChainError(
                f"walk of {len(self.entity_walk)} nodes cannot carry "
                f"{len(self.triples)} triples"
            )
        if len(self.layers) != len(self.entity_walk):
            raise ChainError("layers must annotate every walk node")
        for i, triple in enumerate(self.triples):
            step = {self.entity_walk[i], self.entity_walk[i + 1]}
            if step != set(triple.endpoints()) and not (
                len(step) == 1 and triple.subject == triple.object
            ):
                raise ChainError(
                    f"triple {triple.key()} does not connect walk nodes "
                    f"{self.entity_walk[i]!r} -> {self.entity_walk[i + 1]!r}"
                )

    def __len__(self) -> int:
        return len(self.triples)

    def entities(self) -> tuple[str, ...]:
        return self.entity_walk

    def distinct_layers(self) -> set[Layer]:
        return {layer for layer in self.layers if layer is not Layer.UNKNOWN}

    def to_dict(self) -> dict:
        return {
            "triples": [list(t.key()) for t in self.triples],
            "walk": list(self.entity_walk),
            "layers": [layer.to_name() for layer in self.layers],
            "score": self.score,
        }


def thread_from_walk(
    g: KnowledgeGraph,
    triples: tuple[Triple, ...],
    walk: tuple[str, ...],
    score: float | None = None,
) -> KnowledgeThread:
    layers = tuple(g.entity(eid).layer for eid in walk)
    return KnowledgeThread(triples=triples, entity_walk=walk, layers=layers, score=score)


def propose_links(
    embeddings: dict[str, np.ndarray],
    g: KnowledgeGraph,
    cfg: LinkProposalConfig | None = None,
) -> list[Triple]:
    """Similarity-ranked new edges under the three threshold classes.

    Candidate pairs come from each node's top-k most similar peers. A pair
    with both layers known and equal is semantic: accepted outright at the
    direct threshold, or at the bridged threshold when a bridge of at most
    ``max_bridge_hops`` hops already connects the pair. Pairs with both
    layers known and different are cross-layer, oriented from the more
    abstract layer to the more technical one. Pairs involving an unknown
    layer fall under the semantic rule. Existing edges and self-pairs are
    never proposed; global caps keep the strongest proposals per class.
    """
    cfg = cfg or LinkProposalConfig()
    ids = sorted(set(g.entities) & set(embeddings))
    if len(ids) < 2:
        return []
    matrix = np.stack([embeddings[eid] for eid in ids])
    sims = matrix @ matrix.T

    connected_pairs = {frozenset(t.endpoints()) for t in g.triples if t.subject != t.object}

    candidate_pairs: dict[frozenset, float] = {}
    for i, eid in enumerate(ids):
        order = sorted(range(len(ids)), key=lambda j: (-sims[i, j], ids[j]))
        picked = 0
        for j in order:
            if j == i:
                continue
            if picked >= cfg.top_k:
                break
            picked += 1
            pair = frozenset((eid, ids[j]))
            if pair in connected_pairs:
                continue
            best = candidate_pairs.get(pair)
            if best is None or sims[i, j] > best:
                candidate_pairs[pair] = float(sims[i, j])

    semantic: list[tuple[float, str, str]] = []
    cross: list[tuple[float, str, str]] = []
    for pair, sim in candidate_pairs.items():
        a, b = sorted(pair)
        layer_a, layer_b = g.entity(a).layer, g.entity(b).layer
        known = layer_a is not Layer.UNKNOWN and layer_b is not Layer.UNKNOWN
        if known and layer_a is not layer_b:
            if sim >= cfg.cross_layer_threshold:
                if layer_a.ordinal > layer_b.ordinal:
                    a, b = b, a  # orient toward the more technical layer
                cross.append((sim, a, b))
        else:
            if sim >= cfg.direct_threshold:
                semantic.append((sim, a, b))
            elif sim >= cfg.bridged_threshold and g.connected(
                a, b, max_hops=cfg.max_bridge_hops
            ):
                semantic.append((sim, a, b))

    semantic.sort(key=lambda item: (-item[0], item[1], item[2]))
    cross.sort(key=lambda item: (-item[0], item[1], item[2]))

    proposals: list[Triple] = []
    for sim, a, b in semantic[: cfg.max_semantic]:
        proposals.append(
            Triple(
                subject=a,
                predicate=SEMANTIC_PREDICATE,
                object=b,
                provenance="traversal",
                weight=min(1.0, max(0.0, sim)),
            )
        )
    for sim, a, b in cross[: cfg.max_cross_layer]:
        proposals.append(
            Triple(
                subject=a,
                predicate=CROSS_LAYER_PREDICATE,
                object=b,
                provenance="traversal",
                weight=min(1.0, max(0.0, sim)),
            )
        )
    return proposals


def seed_entities(g: KnowledgeGraph, thread: UserKnowledgeThread) -> list[str]:
    """Graph ids whose label matches a user-thread entity; sorted, missing skipped."""
    wanted = {normalize_label(e) for e in thread.entities}
    return sorted(eid for eid in g.entities if g.entity(eid).label in wanted)


def _path_score(
    g: KnowledgeGraph, embeddings: dict[str, np.ndarray], walk: tuple[str, ...]
) -> float:
    """Mean endpoint similarity over edges plus the layer-advance bonus."""
    sims = [
        cosine(embeddings[walk[i]], embeddings[walk[i + 1]])
        for i in range(len(walk) - 1)
    ]
    advances = 0
    for i in range(len(walk) - 1):
        prev = g.entity(walk[i]).layer.ordinal
        nxt = g.entity(walk[i + 1]).layer.ordinal
        if prev is not None and nxt is not None and nxt > prev:
            advances += 1
    return float(np.mean(sims)) + LAYER_ADVANCE_BONUS * advances


def form_threads(
    g: KnowledgeGraph,
    thread: UserKnowledgeThread,
    embeddings: dict[str, np.ndarray],
    max_len: int = 6,
    beam: int | float = 5,
) -> list[KnowledgeThread]:
    """Beam search for high-scoring simple paths from each user anchor.

    States extend one undirected edge at a time without revisiting nodes; at
    every depth only the best ``beam`` states per seed survive. All states
    ever explored compete to be a returned thread, so shorter prefixes with
    better scores are kept. An infinite beam makes this exhaustive
    enumeration of simple paths up to ``max_len`` edges.
    """
    if max_len < 1:
        raise ValueError(f"max_len must be at least 1, got {max_len}")
    if beam != math.inf and int(beam) < 1:
        raise ValueError(f"beam must be at least 1 or infinite, got {beam}")

    results: list[KnowledgeThread] = []
    seen_threads: set[tuple] = set()
    for seed in seed_entities(g, thread):
        if seed not in embeddings:
            continue
        # state: (walk, triples, visited)
        states: list[tuple[tuple[str, ...], tuple[Triple, ...]]] = [((seed,), ())]
        explored: list[tuple[float, tuple[str, ...], tuple[Triple, ...]]] = []
        for _ in range(max_len):
            extensions: list[tuple[float, tuple[str, ...], tuple[Triple, ...]]] = []
            for walk, triples in states:
                tip = walk[-1]
                visited = set(walk)
                for triple in g.incident_triples(tip):
                    other = (
                        triple.object if triple.subject == tip else triple.subject
                    )
                    if other in visited or other not in embeddings:
                        continue
                    new_walk = walk + (other,)
                    new_triples = triples + (triple,)
                    score = _path_score(g, embeddings, new_walk)
                    extensions.append((score, new_walk, new_triples))
            if not extensions:
                break
            extensions.sort(key=lambda item: (-item[0], item[1]))
            if beam != math.inf:
                extensions = extensions[: int(beam)]
            explored.extend(extensions)
            states = [(walk, triples) for _, walk, triples in extensions]

        explored.sort(key=lambda item: (-item[0], item[1]))
        kept = 0
        for score, walk, triples in explored:
            if beam != math.inf and kept >= int(beam):
                break
            key = tuple(t.key() for t in triples)
            if key in seen_threads:
                continue
            seen_threads.add(key)
            results.append(thread_from_walk(g, triples, walk, score=score))
            kept += 1

    results.sort(key=lambda th: (-(th.score or 0.0), th.entity_walk))
    return results
