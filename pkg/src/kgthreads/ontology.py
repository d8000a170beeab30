"""Relation ontology, layer prototypes, and the entity-layer classification cascade.

The default assets ship with the package: relation descriptors double as a
controlled relation vocabulary, layer prototypes anchor the semantic stage of
classification, and the per-domain term lists are shared with the
instruction-effectiveness scorer.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .embeddings import EmbeddingProvider, cosine
from .errors import ConfigError
from .graph import Layer, ORDERED_LAYERS, normalize_label

# Cascade stage 2: minimum prototype similarity to classify a label semantically.
PROTOTYPE_SIMILARITY_THRESHOLD = 0.5

# Relation label assigned when no descriptor scores above the normalization floor.
FALLBACK_RELATION = "related_to"

DOMAIN_TAGS = ("healthcare", "manufacturing", "finance", "education", "technology", "general")


@dataclass(frozen=True)
class RelationDescriptor:
    label: str
    description: str


@dataclass(frozen=True)
class Ontology:
    relation_descriptors: tuple[RelationDescriptor, ...]
    layer_prototypes: dict[Layer, tuple[str, ...]]
    layer_records: dict[str, Layer]
    layer_keywords: dict[Layer, tuple[str, ...]]
    domain_dictionaries: dict[str, tuple[str, ...]]
    canonical_labels: frozenset[str] = field(init=False)

    def __post_init__(self) -> None:
        labels = [d.label for d in self.relation_descriptors]
        if len(labels) != len(set(labels)):
            raise ConfigError("relation descriptor labels must be unique")
        for layer in ORDERED_LAYERS:
            if not self.layer_prototypes.get(layer):
                raise ConfigError(f"layer {layer.to_name()} has no prototype phrases")
        object.__setattr__(self, "canonical_labels", frozenset(labels))

    def descriptor(self, label: str) -> RelationDescriptor | None:
        for desc in self.relation_descriptors:
            if desc.label == label:
                return desc
        return None


def load_ontology(path: Path | None = None) -> Ontology:
    """Load an ontology JSON file; with no path, the packaged default."""
    if path is None:
        text = resources.files("kgthreads.data").joinpath("ontology.json").read_text("utf-8")
    else:
        text = path.read_text(encoding="utf-8")
    raw = json.loads(text)
    descriptors = tuple(
        RelationDescriptor(label=normalize_label(r["label"]), description=r["description"])
        for r in raw["relations"]
    )
    prototypes = {
        Layer.from_name(name): tuple(phrases) for name, phrases in raw["layer_prototypes"].items()
    }
    records = {
        normalize_label(label): Layer.from_name(layer_name)
        for label, layer_name in raw.get("layer_records", {}).items()
    }
    keywords = {
        Layer.from_name(name): tuple(normalize_label(k) for k in words)
        for name, words in raw.get("layer_keywords", {}).items()
    }
    domains = {
        tag: tuple(_load_domain_terms(tag, raw.get("domain_dictionaries", {})))
        for tag in DOMAIN_TAGS
    }
    return Ontology(
        relation_descriptors=descriptors,
        layer_prototypes=prototypes,
        layer_records=records,
        layer_keywords=keywords,
        domain_dictionaries=domains,
    )


def _load_domain_terms(tag: str, inline: dict) -> list[str]:
    if tag in inline:
        return [normalize_label(t) for t in inline[tag]]
    res = resources.files("kgthreads.data").joinpath(f"lexicons/domains/{tag}.txt")
    terms = []
    for line in res.read_text("utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            terms.append(normalize_label(line))
    return terms


def classify_entity(label: str, onto: Ontology, embedder: EmbeddingProvider) -> Layer:
    """Assign a layer via the cascade; the first stage that fires decides.

    1. exact match in the curated layer records,
    2. max cosine against layer prototype phrases, if >= 0.5,
    3. keyword pattern tables (whole-word match; ties go to the more
       technical layer, since deeper placement is the safer default when a
       label straddles layers),
    4. UNKNOWN.
    """
    norm = normalize_label(label)
    if not norm:
        raise ValueError("cannot classify an empty label")

    recorded = onto.layer_records.get(norm)
    if recorded is not None:
        return recorded

    label_vec = embedder.embed(norm)
    best_layer, best_sim = Layer.UNKNOWN, -1.0
    for layer in ORDERED_LAYERS:
        for phrase in onto.layer_prototypes[layer]:
            sim = cosine(label_vec, embedder.embed(phrase))
            if sim > best_sim:
                best_layer, best_sim = layer, sim
    if best_sim >= PROTOTYPE_SIMILARITY_THRESHOLD:
        return best_layer

    words = set(re.findall(r"[0-9a-z]+", norm))
    hit_counts = {
        layer: sum(1 for kw in onto.layer_keywords.get(layer, ()) if kw in words)
        for layer in ORDERED_LAYERS
    }
    best = max(hit_counts.values(), default=0)
    if best > 0:
        for layer in reversed(ORDERED_LAYERS):
            if hit_counts[layer] == best:
                return layer
    return Layer.UNKNOWN


def classify_unknown_layers(graph, onto: Ontology, embedder: EmbeddingProvider):
    """Return a graph with every UNKNOWN-layer entity classified via the cascade.

    Entities arriving from user input or enrichment carry no layer; the
    pipeline resolves them lazily with this pass before traversal.
    """
    updates = {
        eid: classify_entity(ent.label, onto, embedder)
        for eid, ent in graph.entities.items()
        if ent.layer is Layer.UNKNOWN
    }
    updates = {eid: layer for eid, layer in updates.items() if layer is not Layer.UNKNOWN}
    if not updates:
        return graph
    return graph.with_entity_layers(updates)
