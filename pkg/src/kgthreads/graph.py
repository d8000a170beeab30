"""Layered knowledge-graph data model, persistence, and structural metrics.

The graph is stored directed (triples are directed records), but degree,
density, clustering, and hop expansion treat edges as undirected: the layer
statistics of interest are consistent with the 2|T|/|E| degree reading, and
relevance-based traversal does not follow edge direction.

A :class:`KnowledgeGraph` is immutable after construction and safely
shareable across concurrent readers; all mutation happens by building a new
graph value (see :meth:`KnowledgeGraph.with_additions`).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from .errors import GraphFormatError, UnknownEntityError


class Layer(enum.Enum):
    """Abstraction layers, totally ordered from business intent to technology detail."""

    BUSINESS = 0
    SYSTEM = 1
    DATA = 2
    TECHNOLOGY = 3
    UNKNOWN = -1

    @property
    def ordinal(self) -> int | None:
        """Position in the progression order; None for UNKNOWN, which never scores."""
        return None if self is Layer.UNKNOWN else self.value

    @classmethod
    def from_name(cls, name: str | None) -> "Layer":
        if name is None or not str(name).strip():
            return cls.UNKNOWN
        key = str(name).strip().lower()
        try:
            return _LAYER_BY_NAME[key]
        except KeyError:
            raise GraphFormatError(f"unknown layer name {name!r}") from None

    def to_name(self) -> str:
        return self.name.lower()


_LAYER_BY_NAME = {
    "business": Layer.BUSINESS,
    "system": Layer.SYSTEM,
    "data": Layer.DATA,
    "technology": Layer.TECHNOLOGY,
    "unknown": Layer.UNKNOWN,
}

ORDERED_LAYERS = (Layer.BUSINESS, Layer.SYSTEM, Layer.DATA, Layer.TECHNOLOGY)

ENTITY_PROVENANCES = ("domain", "user", "llm")
TRIPLE_PROVENANCES = ("domain", "user", "llm", "traversal")


def normalize_label(label: str) -> str:
    """Lowercase with collapsed whitespace; the identity used everywhere labels compare."""
    return " ".join(str(label).lower().split())


@dataclass(frozen=True)
class Entity:
    id: str
    label: str
    layer: Layer = Layer.UNKNOWN
    provenance: str = "domain"

    def __post_init__(self) -> None:
        if not self.id:
            raise GraphFormatError("entity id must be non-empty")
        norm = normalize_label(self.label)
        if not norm:
            raise GraphFormatError(f"entity {self.id!r} has an empty label")
        object.__setattr__(self, "label", norm)
        if self.provenance not in ENTITY_PROVENANCES:
            raise GraphFormatError(f"entity {self.id!r}: bad provenance {self.provenance!r}")


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: str
    provenance: str = "domain"
    weight: float = 1.0

    def __post_init__(self) -> None:
        pred = normalize_label(self.predicate)
        if not pred:
            raise GraphFormatError(f"triple ({self.subject}, ?, {self.object}): empty predicate")
        object.__setattr__(self, "predicate", pred)
        if self.provenance not in TRIPLE_PROVENANCES:
            raise GraphFormatError(f"triple {self.key()}: bad provenance {self.provenance!r}")
        if not (0.0 <= self.weight <= 1.0):
            raise GraphFormatError(f"triple {self.key()}: weight {self.weight} outside [0, 1]")

    def key(self) -> tuple[str, str, str]:
        """Normalized (s, p, o) identity."""
        return (self.subject, self.predicate, self.object)

    def endpoints(self) -> tuple[str, str]:
        return (self.subject, self.object)

    def other_endpoint(self, entity_id: str) -> str:
        if entity_id == self.subject:
            return self.object
        if entity_id == self.object:
            return self.subject
        raise UnknownEntityError(f"{entity_id!r} is not an endpoint of {self.key()}")


@dataclass(frozen=True)
class LayerStats:
    layer: Layer
    entity_count: int
    intra_triples: int
    intra_degree: float
    incident_triples: int
    incident_degree: float


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int
    average_degree: float
    density: float
    average_clustering: float
    layers_covered: int
    per_layer: tuple[LayerStats, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "average_degree": round(self.average_degree, 6),
            "density": round(self.density, 6),
            "average_clustering": round(self.average_clustering, 6),
            "layers_covered": self.layers_covered,
            "per_layer": [
                {
                    "layer": ls.layer.to_name(),
                    "entities": ls.entity_count,
                    "intra_triples": ls.intra_triples,
                    "intra_degree": round(ls.intra_degree, 6),
                    "incident_triples": ls.incident_triples,
                    "incident_degree": round(ls.incident_degree, 6),
                }
                for ls in self.per_layer
            ],
        }


class KnowledgeGraph:
    """Immutable entity/triple store with undirected adjacency indexes."""

    __slots__ = ("_entities", "_triples", "_by_label", "_adjacency", "_triple_keys")

    def __init__(self, entities: Iterable[Entity], triples: Iterable[Triple]) -> None:
        ents: dict[str, Entity] = {}
        for ent in entities:
            prior = ents.get(ent.id)
            if prior is not None and prior != ent:
                raise GraphFormatError(f"duplicate entity id {ent.id!r} with conflicting fields")
            ents[ent.id] = ent
        trips: list[Triple] = []
        keys: set[tuple[str, str, str]] = set()
        for tri in triples:
            if tri.subject not in ents or tri.object not in ents:
                raise GraphFormatError(f"triple {tri.key()} has a dangling endpoint")
            if tri.key() in keys:
                continue
            keys.add(tri.key())
            trips.append(tri)
        self._entities = ents
        self._triples = tuple(trips)
        self._triple_keys = keys
        self._by_label: dict[str, str] = {}
        for ent in ents.values():
            self._by_label.setdefault(ent.label, ent.id)
        adjacency: dict[str, list[int]] = {eid: [] for eid in ents}
        for idx, tri in enumerate(self._triples):
            adjacency[tri.subject].append(idx)
            if tri.object != tri.subject:
                adjacency[tri.object].append(idx)
        self._adjacency = adjacency

    # -- basic queries ------------------------------------------------------

    @property
    def entity_count(self) -> int:
        return len(self._entities)

    @property
    def triple_count(self) -> int:
        return len(self._triples)

    @property
    def entities(self) -> Mapping[str, Entity]:
        return self._entities

    @property
    def triples(self) -> tuple[Triple, ...]:
        return self._triples

    def entity(self, entity_id: str) -> Entity:
        try:
            return self._entities[entity_id]
        except KeyError:
            raise UnknownEntityError(f"unknown entity id {entity_id!r}") from None

    def has_entity(self, entity_id: str) -> bool:
        return entity_id in self._entities

    def entity_by_label(self, label: str) -> Entity | None:
        eid = self._by_label.get(normalize_label(label))
        return self._entities[eid] if eid is not None else None

    def has_triple(self, key: tuple[str, str, str]) -> bool:
        return key in self._triple_keys

    def incident_triples(self, entity_id: str) -> list[Triple]:
        """All triples touching the entity, in insertion order."""
        if entity_id not in self._adjacency:
            raise UnknownEntityError(f"unknown entity id {entity_id!r}")
        return [self._triples[i] for i in self._adjacency[entity_id]]

    def neighbor_ids(self, entity_id: str) -> set[str]:
        """Distinct undirected neighbors, excluding the entity itself."""
        out: set[str] = set()
        for tri in self.incident_triples(entity_id):
            out.add(tri.other_endpoint(entity_id))
        out.discard(entity_id)
        return out

    def in_neighbor_ids(self, entity_id: str) -> list[str]:
        """Sources of edges pointing at the entity (message-passing direction)."""
        if entity_id not in self._adjacency:
            raise UnknownEntityError(f"unknown entity id {entity_id!r}")
        return [
            self._triples[i].subject
            for i in self._adjacency[entity_id]
            if self._triples[i].object == entity_id
        ]

    def connected(self, a: str, b: str, max_hops: int = 1) -> bool:
        """True when b lies within max_hops undirected hops of a (a != b)."""
        if max_hops < 1 or a == b:
            return False
        frontier = {a}
        seen = {a}
        for _ in range(max_hops):
            nxt: set[str] = set()
            for eid in frontier:
                for nid in self.neighbor_ids(eid):
                    if nid == b:
                        return True
                    if nid not in seen:
                        seen.add(nid)
                        nxt.add(nid)
            if not nxt:
                break
            frontier = nxt
        return False

    # -- derived graphs -----------------------------------------------------

    def induced_subgraph(self, entity_ids: Iterable[str]) -> "KnowledgeGraph":
        keep = set(entity_ids)
        missing = keep - self._entities.keys()
        if missing:
            raise UnknownEntityError(f"unknown entity ids {sorted(missing)!r}")
        ents = [self._entities[eid] for eid in self._entities if eid in keep]
        trips = [t for t in self._triples if t.subject in keep and t.object in keep]
        return KnowledgeGraph(ents, trips)

    def with_additions(
        self, entities: Iterable[Entity] = (), triples: Iterable[Triple] = ()
    ) -> "KnowledgeGraph":
        """New graph with extra entities/triples; existing records are never altered."""
        merged = dict(self._entities)
        for ent in entities:
            if ent.id not in merged:
                merged[ent.id] = ent
        new_triples = list(self._triples)
        for tri in triples:
            if tri.key() not in self._triple_keys:
                new_triples.append(tri)
        return KnowledgeGraph(merged.values(), new_triples)

    def with_entity_layers(self, layers: Mapping[str, Layer]) -> "KnowledgeGraph":
        """New graph with the given entities reassigned to the given layers."""
        ents = [
            replace(ent, layer=layers[eid]) if (eid := ent.id) in layers else ent
            for ent in self._entities.values()
        ]
        return KnowledgeGraph(ents, self._triples)

    def layer_entity_ids(self, layer: Layer) -> set[str]:
        return {eid for eid, ent in self._entities.items() if ent.layer is layer}


# -- persistence -------------------------------------------------------------


def load_graph(source: str | Path) -> KnowledgeGraph:
    """Load a graph from JSON text or a file path.

    Format: {"entities": [{"id", "label", "layer"?}...],
             "triples": [{"s", "p", "o", "provenance"?, "weight"?}...]}.
    Entities referenced only by triples are auto-created with layer UNKNOWN.
    Problems are reported with the record index (the format is JSON, not
    line-oriented, so indexes are the stable coordinate).
    """
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    else:
        text = source
        maybe_path = Path(text)
        if "\n" not in text and not text.lstrip().startswith("{") and maybe_path.is_file():
            text = maybe_path.read_text(encoding="utf-8")
    try:
        payload = json.loads(text) if text.strip() else {"entities": [], "triples": []}
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise GraphFormatError("top level must be a JSON object")

    entities: dict[str, Entity] = {}
    for idx, record in enumerate(payload.get("entities", [])):
        try:
            ent = Entity(
                id=str(record["id"]),
                label=record.get("label", record["id"]),
                layer=Layer.from_name(record.get("layer")),
                provenance=record.get("provenance", "domain"),
            )
        except (KeyError, TypeError) as exc:
            raise GraphFormatError(f"entities[{idx}]: missing or bad field ({exc})") from exc
        except GraphFormatError as exc:
            raise GraphFormatError(f"entities[{idx}]: {exc}") from exc
        prior = entities.get(ent.id)
        if prior is not None and prior.layer is not ent.layer:
            raise GraphFormatError(
                f"entities[{idx}]: duplicate id {ent.id!r} with conflicting layer "
                f"({prior.layer.to_name()} vs {ent.layer.to_name()})"
            )
        entities[ent.id] = ent

    triples: list[Triple] = []
    for idx, record in enumerate(payload.get("triples", [])):
        try:
            tri = Triple(
                subject=str(record["s"]),
                predicate=record["p"],
                object=str(record["o"]),
                provenance=record.get("provenance", "domain"),
                weight=float(record.get("weight", 1.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphFormatError(f"triples[{idx}]: missing or bad field ({exc})") from exc
        except GraphFormatError as exc:
            raise GraphFormatError(f"triples[{idx}]: {exc}") from exc
        for endpoint in tri.endpoints():
            if endpoint not in entities:
                entities[endpoint] = Entity(
                    id=endpoint,
                    label=endpoint,
                    layer=Layer.UNKNOWN,
                    provenance=tri.provenance if tri.provenance in ENTITY_PROVENANCES else "domain",
                )
        triples.append(tri)

    return KnowledgeGraph(entities.values(), triples)


def save_graph(graph: KnowledgeGraph, path: Path | None = None) -> str:
    """Serialize to the triple-record JSON format; returns the text."""
    payload = {
        "entities": [
            {"id": e.id, "label": e.label, "layer": e.layer.to_name(), "provenance": e.provenance}
            for e in graph.entities.values()
        ],
        "triples": [
            {"s": t.subject, "p": t.predicate, "o": t.object, "provenance": t.provenance, "weight": t.weight}
            for t in graph.triples
        ],
    }
    text = json.dumps(payload, indent=1, sort_keys=True)
    if path is not None:
        path.write_text(text, encoding="utf-8")
    return text


def export_node_link(graph: KnowledgeGraph) -> dict:
    """Node-link JSON for visualization tooling."""
    return {
        "nodes": [
            {"id": e.id, "label": e.label, "layer": e.layer.to_name(), "provenance": e.provenance}
            for e in graph.entities.values()
        ],
        "links": [
            {
                "source": t.subject,
                "target": t.object,
                "predicate": t.predicate,
                "provenance": t.provenance,
                "weight": t.weight,
            }
            for t in graph.triples
        ],
    }


# -- structural metrics -------------------------------------------------------


def _undirected_neighbor_map(graph: KnowledgeGraph) -> dict[str, set[str]]:
    return {eid: graph.neighbor_ids(eid) for eid in graph.entities}


def _average_clustering(neighbors: dict[str, set[str]]) -> float:
    """Mean local clustering over all nodes, undirected; degree < 2 contributes 0."""
    if not neighbors:
        return 0.0
    total = 0.0
    for node, nbrs in neighbors.items():
        k = len(nbrs)
        if k < 2:
            continue
        links = 0
        nbr_list = sorted(nbrs)
        for i, u in enumerate(nbr_list):
            u_nbrs = neighbors[u]
            for v in nbr_list[i + 1 :]:
                if v in u_nbrs:
                    links += 1
        total += 2.0 * links / (k * (k - 1))
    return total / len(neighbors)


def compute_stats(graph: KnowledgeGraph, scope: Layer | None = None) -> GraphStats:
    """Structural metrics; with ``scope``, metrics of that layer's induced subgraph.

    average degree = 2|T|/|E|; density = 2|T|/(|E|(|E|-1)) for |E| >= 2, else 0.
    Per-layer rows report both the intra-layer degree (induced subgraph) and
    the incident degree (full-graph degree averaged over the layer's nodes),
    since published per-layer figures are ambiguous between the two readings.
    """
    if scope is not None:
        graph = graph.induced_subgraph(graph.layer_entity_ids(scope))

    n = graph.entity_count
    m = graph.triple_count
    avg_degree = 2.0 * m / n if n else 0.0
    density = 2.0 * m / (n * (n - 1)) if n >= 2 else 0.0
    neighbors = _undirected_neighbor_map(graph)
    clustering = _average_clustering(neighbors)

    present = {ent.layer for ent in graph.entities.values() if ent.layer is not Layer.UNKNOWN}
    per_layer: list[LayerStats] = []
    if scope is None:
        degree = {eid: len(graph.incident_triples(eid)) for eid in graph.entities}
        for layer in ORDERED_LAYERS:
            ids = graph.layer_entity_ids(layer)
            if not ids:
                continue
            intra = sum(1 for t in graph.triples if t.subject in ids and t.object in ids)
            incident = sum(1 for t in graph.triples if t.subject in ids or t.object in ids)
            per_layer.append(
                LayerStats(
                    layer=layer,
                    entity_count=len(ids),
                    intra_triples=intra,
                    intra_degree=2.0 * intra / len(ids),
                    incident_triples=incident,
                    incident_degree=sum(degree[eid] for eid in ids) / len(ids),
                )
            )

    return GraphStats(
        node_count=n,
        edge_count=m,
        average_degree=avg_degree,
        density=density,
        average_clustering=clustering,
        layers_covered=len(present),
        per_layer=tuple(per_layer),
    )


def neighborhood(graph: KnowledgeGraph, seeds: Iterable[str], max_hops: int) -> set[str]:
    """All entities reachable from any seed in <= max_hops undirected steps.

    Includes the seeds themselves. Unknown seed ids raise.
    """
    if max_hops < 0:
        raise ValueError(f"max_hops must be >= 0, got {max_hops}")
    frontier = set()
    for seed in seeds:
        if not graph.has_entity(seed):
            raise UnknownEntityError(f"unknown seed id {seed!r}")
        frontier.add(seed)
    visited = set(frontier)
    for _ in range(max_hops):
        nxt: set[str] = set()
        for eid in frontier:
            nxt |= graph.neighbor_ids(eid)
        nxt -= visited
        if not nxt:
            break
        visited |= nxt
        frontier = nxt
    return visited
