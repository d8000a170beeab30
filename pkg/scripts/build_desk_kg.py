#!/usr/bin/env python3
"""Generate the shipped desk knowledge graph with pinned structural counts.

Layout targets (self-consistent with the documented per-layer stats):
  business    180 entities / 234 intra triples
  system      198 entities / 387 intra triples   (intra degree 3.91)
  data        156 entities / 298 intra triples   (intra degree 3.82)
  technology  223 entities / 300 intra triples
  cross-layer 155 triples
  total       757 entities / 1374 triples        (average degree 3.63)

The generator is deterministic (fixed seed, sorted pools) so the JSON is
byte-stable. A handcrafted assisted-living anchor cluster spans all four
layers so the shipped prompts hit recognizable vocabulary.
"""

from __future__ import annotations

import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from kgthreads.graph import (  # noqa: E402
    Entity,
    KnowledgeGraph,
    Layer,
    Triple,
    compute_stats,
    normalize_label,
    save_graph,
)

SEED = 20240718

TARGETS = {
    Layer.BUSINESS: (180, 234),
    Layer.SYSTEM: (198, 387),
    Layer.DATA: (156, 298),
    Layer.TECHNOLOGY: (223, 300),
}
CROSS_QUOTAS = [
    (Layer.BUSINESS, Layer.SYSTEM, 45),
    (Layer.SYSTEM, Layer.DATA, 45),
    (Layer.DATA, Layer.TECHNOLOGY, 45),
    (Layer.BUSINESS, Layer.DATA, 10),
    (Layer.SYSTEM, Layer.TECHNOLOGY, 10),
]

# 15 x 12 = 180
BUSINESS_PREFIXES = [
    "patient", "caregiver", "clinic", "pharmacy", "family", "billing",
    "compliance", "training", "wellness", "safety", "staffing", "supply",
    "insurance", "audit", "enrollment",
]
BUSINESS_SUFFIXES = [
    "care goal", "adherence policy", "support program", "reporting requirement",
    "satisfaction target", "cost budget", "service agreement", "escalation process",
    "onboarding workflow", "review cycle", "privacy rule", "retention plan",
]

# 18 x 11 = 198
SYSTEM_PREFIXES = [
    "reminder", "alert", "monitoring", "scheduling", "dispensing", "notification",
    "authentication", "telemetry", "inventory", "reporting", "escalation",
    "billing", "enrollment", "diagnostics", "sync", "backup", "analytics",
    "messaging",
]
SYSTEM_SUFFIXES = [
    "service", "module", "controller", "gateway", "scheduler", "pipeline",
    "manager", "interface", "daemon", "api", "queue worker",
]

# 12 x 13 = 156
DATA_PREFIXES = [
    "medication", "dose", "patient", "sensor", "alert", "caregiver",
    "inventory", "billing", "audit", "session", "device", "adherence",
]
DATA_SUFFIXES = [
    "schedule record", "event log", "history table", "profile store",
    "measurement stream", "status snapshot", "summary report", "reference list",
    "configuration entry", "archive", "index", "cache entry", "queue entry",
]

# 20 x 11 = 220, plus 3 handcrafted device parts = 223
TECH_PREFIXES = [
    "mqtt", "rest", "sql", "nosql", "docker", "kubernetes", "linux", "python",
    "tls", "oauth", "redis", "kafka", "postgres", "s3", "grafana",
    "prometheus", "nginx", "react", "firmware", "bluetooth",
]
TECH_SUFFIXES = [
    "broker", "endpoint", "database", "cluster", "container", "runtime",
    "library", "toolkit", "certificate", "token store", "cache",
]
TECH_EXTRAS = ["speaker unit", "weight sensor", "camera module"]

INTRA_PREDICATES = {
    Layer.BUSINESS: ["supports", "requires", "improves", "part_of", "validates", "recommends"],
    Layer.SYSTEM: ["integrates_with", "uses", "monitors", "notifies", "schedules", "controls", "processes", "provides"],
    Layer.DATA: ["contains", "part_of", "is_a", "tracks"],
    Layer.TECHNOLOGY: ["uses", "hosts", "integrates_with", "secures", "transmits", "is_a"],
}
CROSS_PREDICATES = {
    (Layer.BUSINESS, Layer.SYSTEM): ["requires", "uses", "schedules"],
    (Layer.SYSTEM, Layer.DATA): ["stores", "logs", "processes", "collects", "generates", "analyzes"],
    (Layer.DATA, Layer.TECHNOLOGY): ["uses", "requires", "transmits"],
    (Layer.BUSINESS, Layer.DATA): ["requires", "tracks"],
    (Layer.SYSTEM, Layer.TECHNOLOGY): ["uses", "requires", "transmits"],
}

# Assisted-living anchor cluster: (subject label, predicate, object label).
# Every label below must exist in the generated pools.
ANCHOR_TRIPLES = [
    ("patient care goal", "requires", "reminder service"),
    ("caregiver support program", "requires", "notification service"),
    ("patient adherence policy", "tracks", "adherence summary report"),
    ("reminder service", "schedules", "dispensing controller"),
    ("reminder service", "stores", "medication schedule record"),
    ("alert gateway", "logs", "alert event log"),
    ("monitoring service", "collects", "sensor measurement stream"),
    ("dispensing controller", "uses", "weight sensor"),
    ("notification service", "uses", "speaker unit"),
    ("medication schedule record", "uses", "postgres database"),
    ("sensor measurement stream", "transmits", "mqtt broker"),
    ("dose event log", "uses", "postgres database"),
]


def build_labels() -> dict[Layer, list[str]]:
    labels = {
        Layer.BUSINESS: [f"{p} {s}" for p in BUSINESS_PREFIXES for s in BUSINESS_SUFFIXES],
        Layer.SYSTEM: [f"{p} {s}" for p in SYSTEM_PREFIXES for s in SYSTEM_SUFFIXES],
        Layer.DATA: [f"{p} {s}" for p in DATA_PREFIXES for s in DATA_SUFFIXES],
        Layer.TECHNOLOGY: [f"{p} {s}" for p in TECH_PREFIXES for s in TECH_SUFFIXES] + TECH_EXTRAS,
    }
    for layer, (want, _) in TARGETS.items():
        assert len(labels[layer]) == want, (layer, len(labels[layer]))
        assert len(set(labels[layer])) == want
    return labels


def main() -> None:
    rng = random.Random(SEED)
    labels = build_labels()

    entities = []
    id_by_label: dict[str, str] = {}
    for layer in (Layer.BUSINESS, Layer.SYSTEM, Layer.DATA, Layer.TECHNOLOGY):
        for label in labels[layer]:
            eid = normalize_label(label).replace(" ", "_")
            assert eid not in id_by_label.values()
            id_by_label[label] = eid
            entities.append(Entity(id=eid, label=label, layer=layer))

    layer_of = {id_by_label[lab]: layer for layer in labels for lab in labels[layer]}

    anchor_by_pair: dict[tuple[Layer, Layer], list[tuple[str, str, str]]] = {}
    for s_lab, pred, o_lab in ANCHOR_TRIPLES:
        for lab in (s_lab, o_lab):
            assert lab in id_by_label, f"anchor label missing from pools: {lab}"
        s_id, o_id = id_by_label[s_lab], id_by_label[o_lab]
        key = (layer_of[s_id], layer_of[o_id])
        anchor_by_pair.setdefault(key, []).append((s_id, pred, o_id))

    triples: list[Triple] = []
    used_pairs: set[frozenset[str]] = set()

    def add(s: str, p: str, o: str) -> bool:
        pair = frozenset((s, o))
        if s == o or pair in used_pairs:
            return False
        used_pairs.add(pair)
        triples.append(Triple(subject=s, predicate=p, object=o, provenance="domain", weight=1.0))
        return True

    # Intra-layer: anchors first, then a random spanning tree, then filler.
    for layer in (Layer.BUSINESS, Layer.SYSTEM, Layer.DATA, Layer.TECHNOLOGY):
        want_nodes, want_edges = TARGETS[layer]
        ids = [id_by_label[lab] for lab in labels[layer]]
        count = 0
        for s, p, o in anchor_by_pair.get((layer, layer), []):
            if add(s, p, o):
                count += 1
        order = ids[:]
        rng.shuffle(order)
        preds = INTRA_PREDICATES[layer]
        for i in range(1, len(order)):
            if count >= want_edges:
                break
            a = order[i]
            b = order[rng.randrange(i)]
            p = preds[rng.randrange(len(preds))]
            if rng.random() < 0.5:
                a, b = b, a
            if add(a, p, b):
                count += 1
        while count < want_edges:
            a = ids[rng.randrange(len(ids))]
            b = ids[rng.randrange(len(ids))]
            p = preds[rng.randrange(len(preds))]
            if add(a, p, b):
                count += 1

    # Cross-layer quotas, anchors counted against their quota first.
    for src_layer, dst_layer, quota in CROSS_QUOTAS:
        count = 0
        for s, p, o in anchor_by_pair.get((src_layer, dst_layer), []):
            if add(s, p, o):
                count += 1
        src_ids = [id_by_label[lab] for lab in labels[src_layer]]
        dst_ids = [id_by_label[lab] for lab in labels[dst_layer]]
        preds = CROSS_PREDICATES[(src_layer, dst_layer)]
        while count < quota:
            s = src_ids[rng.randrange(len(src_ids))]
            o = dst_ids[rng.randrange(len(dst_ids))]
            p = preds[rng.randrange(len(preds))]
            if add(s, p, o):
                count += 1

    graph = KnowledgeGraph(entities=tuple(entities), triples=tuple(triples))
    stats = compute_stats(graph)
    assert stats.node_count == 757, stats.node_count
    assert stats.edge_count == 1374, stats.edge_count
    assert abs(stats.average_degree - 3.63) <= 0.01, stats.average_degree
    by_layer = {ls.layer: ls for ls in stats.per_layer}
    assert abs(by_layer[Layer.SYSTEM].intra_degree - 3.91) <= 0.01
    assert abs(by_layer[Layer.DATA].intra_degree - 3.82) <= 0.01

    out = Path(__file__).resolve().parents[1] / "src" / "kgthreads" / "data" / "desk_kg.json"
    save_graph(graph, out)
    print(f"wrote {out}")
    print(
        f"nodes={stats.node_count} edges={stats.edge_count} "
        f"avg_degree={stats.average_degree:.4f} clustering={stats.average_clustering:.4f}"
    )
    for ls in stats.per_layer:
        print(
            f"  {ls.layer.to_name():<12} entities={ls.entity_count:<4} "
            f"intra={ls.intra_triples:<4} intra_degree={ls.intra_degree:.4f}"
        )


if __name__ == "__main__":
    main()
