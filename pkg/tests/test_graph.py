"""Graph model: serialization, structural metrics, and neighborhood queries."""

from __future__ import annotations

import json

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgthreads.errors import GraphFormatError, UnknownEntityError
from kgthreads.graph import (
    Entity,
    KnowledgeGraph,
    Layer,
    Triple,
    compute_stats,
    export_node_link,
    load_graph,
    neighborhood,
    save_graph,
)

from conftest import build_random_graph


def small_graph() -> KnowledgeGraph:
    """Hand-built five-node graph with one triangle and one pendant."""
    entities = [
        Entity("a", "alert service", Layer.SYSTEM),
        Entity("b", "message broker", Layer.TECHNOLOGY),
        Entity("c", "care goal", Layer.BUSINESS),
        Entity("d", "dose record", Layer.DATA),
        Entity("e", "audit log", Layer.DATA),
    ]
    triples = [
        Triple("a", "uses", "b"),
        Triple("b", "supports", "c"),
        Triple("c", "requires", "a"),
        Triple("a", "stores", "d"),
    ]
    return KnowledgeGraph(entities, triples)


def test_layer_names_round_trip():
    for name in ("business", "system", "data", "technology", "unknown"):
        assert Layer.from_name(name).to_name() == name
    assert Layer.from_name(None) is Layer.UNKNOWN
    assert Layer.from_name("Business") is Layer.BUSINESS


def test_layer_ordinals_order_the_stack():
    ordinals = [Layer.BUSINESS.ordinal, Layer.SYSTEM.ordinal, Layer.DATA.ordinal, Layer.TECHNOLOGY.ordinal]
    assert ordinals == [0, 1, 2, 3]
    assert Layer.UNKNOWN.ordinal is None


def test_layer_rejects_unknown_name():
    with pytest.raises(GraphFormatError):
        Layer.from_name("middleware")


def test_triple_normalizes_predicate():
    assert Triple("a", " Uses  ", "b").predicate == "uses"


def test_graph_rejects_duplicate_triples_silently_dedups():
    g = KnowledgeGraph(
        [Entity("a", "a", Layer.UNKNOWN), Entity("b", "b", Layer.UNKNOWN)],
        [Triple("a", "uses", "b"), Triple("a", "uses", "b")],
    )
    assert g.triple_count == 1


def test_load_graph_round_trips_through_save(tmp_path):
    g = small_graph()
    path = tmp_path / "g.json"
    save_graph(g, path)
    loaded = load_graph(path)
    assert set(loaded.entities) == set(g.entities)
    assert {t.key() for t in loaded.triples} == {t.key() for t in g.triples}
    assert loaded.entity("a").layer is Layer.SYSTEM


def test_load_graph_accepts_json_text():
    text = json.dumps(
        {
            "entities": [{"id": "x", "label": "x ray", "layer": "data"}],
            "triples": [{"s": "x", "p": "feeds", "o": "y"}],
        }
    )
    g = load_graph(text)
    assert g.entity("x").layer is Layer.DATA
    # Endpoint "y" exists only in a triple: auto-created as UNKNOWN.
    assert g.entity("y").layer is Layer.UNKNOWN


def test_load_graph_reports_bad_records_with_index():
    with pytest.raises(GraphFormatError, match=r"triples\[0\]"):
        load_graph(json.dumps({"entities": [], "triples": [{"s": "a", "o": "b"}]}))
    with pytest.raises(GraphFormatError, match=r"entities\[1\]"):
        load_graph(json.dumps({"entities": [{"id": "a"}, {"label": "no id"}], "triples": []}))
    with pytest.raises(GraphFormatError, match="line"):
        load_graph("{not json")


def test_load_graph_rejects_conflicting_duplicate_layers():
    text = json.dumps(
        {
            "entities": [
                {"id": "a", "layer": "data"},
                {"id": "a", "layer": "system"},
            ],
            "triples": [],
        }
    )
    with pytest.raises(GraphFormatError, match="conflicting layer"):
        load_graph(text)


def test_export_node_link_shape():
    doc = export_node_link(small_graph())
    assert set(doc) == {"nodes", "links"}
    assert {n["id"] for n in doc["nodes"]} == {"a", "b", "c", "d", "e"}
    link = doc["links"][0]
    assert set(link) == {"source", "target", "predicate", "provenance", "weight"}
    assert link["source"] == "a" and link["target"] == "b"


def test_stats_match_networkx_on_hand_graph():
    g = small_graph()
    stats = compute_stats(g)
    nxg = nx.Graph()
    nxg.add_nodes_from(g.entities)
    nxg.add_edges_from((t.subject, t.object) for t in g.triples)
    assert stats.node_count == nxg.number_of_nodes()
    assert stats.edge_count == g.triple_count
    degrees = [d for _, d in nxg.degree()]
    assert stats.average_degree == pytest.approx(sum(degrees) / len(degrees))
    assert stats.density == pytest.approx(nx.density(nxg))
    assert stats.average_clustering == pytest.approx(nx.average_clustering(nxg))
    assert stats.layers_covered == 4


def test_stats_per_layer_counts_intra_edges():
    g = small_graph()
    stats = compute_stats(g)
    by_layer = {ls.layer: ls for ls in stats.per_layer}
    data = by_layer[Layer.DATA]
    assert data.entity_count == 2
    # "d" and "e" share no edge, so no intra-layer triples.
    assert data.intra_triples == 0
    sys = by_layer[Layer.SYSTEM]
    assert sys.entity_count == 1
    assert sys.incident_degree == pytest.approx(3.0)


def test_stats_against_networkx_on_random_graphs():
    for seed in range(5):
        g = build_random_graph(seed, n_nodes=24, n_edges=40)
        stats = compute_stats(g)
        nxg = nx.Graph()
        nxg.add_nodes_from(g.entities)
        nxg.add_edges_from((t.subject, t.object) for t in g.triples)
        degrees = [d for _, d in nxg.degree()]
        assert stats.average_degree == pytest.approx(sum(degrees) / len(degrees), abs=1e-9)
        assert stats.density == pytest.approx(nx.density(nxg), abs=1e-9)
        assert stats.average_clustering == pytest.approx(nx.average_clustering(nxg), abs=1e-9)


def test_stats_on_empty_graph_are_zero():
    stats = compute_stats(KnowledgeGraph([], []))
    assert stats.node_count == 0
    assert stats.average_degree == 0.0
    assert stats.density == 0.0
    assert stats.layers_covered == 0


def test_neighborhood_matches_bfs_oracle():
    for seed in range(5):
        g = build_random_graph(seed, n_nodes=30, n_edges=45)
        nxg = nx.Graph()
        nxg.add_nodes_from(g.entities)
        nxg.add_edges_from((t.subject, t.object) for t in g.triples)
        seeds = ["n0", "n7"]
        for hops in (0, 1, 2, 3):
            expected = set()
            for s in seeds:
                expected |= set(nx.ego_graph(nxg, s, radius=hops).nodes)
            assert neighborhood(g, seeds, hops) == expected


def test_neighborhood_is_monotone_in_hops():
    g = build_random_graph(11, n_nodes=40, n_edges=60)
    previous: set[str] = set()
    for hops in range(5):
        current = neighborhood(g, ["n3"], hops)
        assert previous <= current
        previous = current


def test_neighborhood_rejects_unknown_seeds():
    g = small_graph()
    with pytest.raises(UnknownEntityError):
        neighborhood(g, ["ghost"], 2)
    with pytest.raises(ValueError):
        neighborhood(g, ["a"], -1)


def test_induced_subgraph_keeps_internal_triples_only():
    g = small_graph()
    sub = g.induced_subgraph(["a", "b", "d"])
    assert set(sub.entities) == {"a", "b", "d"}
    assert {t.key() for t in sub.triples} == {("a", "uses", "b"), ("a", "stores", "d")}


def test_with_additions_never_mutates_the_original():
    g = small_graph()
    before_entities = set(g.entities)
    before_triples = {t.key() for t in g.triples}
    extended = g.with_additions(
        [Entity("f", "new node", Layer.TECHNOLOGY)],
        [Triple("f", "uses", "a"), Triple("a", "uses", "b")],
    )
    assert set(g.entities) == before_entities
    assert {t.key() for t in g.triples} == before_triples
    assert "f" in extended.entities
    # The duplicate ("a", "uses", "b") is not added twice.
    assert extended.triple_count == g.triple_count + 1


def test_with_additions_keeps_existing_entity_definition():
    g = small_graph()
    extended = g.with_additions([Entity("a", "imposter", Layer.BUSINESS)], [])
    assert extended.entity("a").label == "alert service"
    assert extended.entity("a").layer is Layer.SYSTEM


def test_connected_respects_hop_bound():
    g = small_graph()
    assert g.connected("a", "b", max_hops=1)
    assert g.connected("d", "b", max_hops=2)
    assert not g.connected("d", "b", max_hops=1)
    assert not g.connected("d", "e", max_hops=4)


def test_incident_and_neighbor_queries_are_undirected():
    g = small_graph()
    assert g.neighbor_ids("a") == {"b", "c", "d"}
    assert {t.key() for t in g.incident_triples("b")} == {
        ("a", "uses", "b"),
        ("b", "supports", "c"),
    }


@given(st.integers(min_value=0, max_value=10_000))
def test_random_graphs_have_consistent_counts(seed):
    g = build_random_graph(seed, n_nodes=12, n_edges=16)
    stats = compute_stats(g)
    assert stats.node_count == g.entity_count
    assert stats.edge_count == g.triple_count
    assert 0.0 <= stats.density <= 1.0
    assert 0.0 <= stats.average_clustering <= 1.0


def test_desk_graph_loads_with_expected_shape(desk_graph):
    assert desk_graph.entity_count == 757
    assert desk_graph.triple_count == 1374
    stats = compute_stats(desk_graph)
    assert stats.layers_covered == 4
    assert stats.average_degree == pytest.approx(3.63, abs=0.01)
