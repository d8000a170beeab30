"""End-to-end pipeline runs, prompt loading, rendering, trace export."""

from __future__ import annotations

import json
from dataclasses import replace

import pytest

from kgthreads.config import load_config
from kgthreads.enrichment import (
    INSTRUCTION_REQUEST_MARKER,
    _FACTS_FOOTER,
    _FACTS_HEADER,
)
from kgthreads.errors import ProviderError, StageError
from kgthreads.graph import Entity, KnowledgeGraph, Layer, Triple, load_graph
from kgthreads.pipeline import (
    PromptRecord,
    build_direct_prompt,
    build_instruction_prompt,
    load_dataset,
    load_prompt,
    prompt_from_dict,
    render_instructions,
    run_pipeline,
    stage_graph,
    write_trace,
)
from kgthreads.traversal import thread_from_walk

from conftest import build_random_graph


class _Canned:
    """Completion provider returning a fixed text for every request."""

    def __init__(self, text: str):
        self.text = text
        self.requests: list[str] = []

    def complete(self, prompt: str, max_tokens: int) -> str:
        self.requests.append(prompt)
        return self.text


class _Failing:
    def complete(self, prompt: str, max_tokens: int) -> str:
        raise ProviderError("provider offline")


@pytest.fixture(scope="module")
def cfg():
    base = load_config(None, env={})
    return replace(base, search=replace(base.search, iterations=60))


@pytest.fixture(scope="module")
def small_graph():
    return build_random_graph(seed=11, n_nodes=10, n_edges=14)


@pytest.fixture(scope="module")
def prompt():
    return PromptRecord(
        id="p1",
        domain="technology",
        text=(
            "The alert service monitors the sensor stream."
            " It stores readings in the schedule table."
        ),
        entities=("alert service", "sensor stream"),
    )


@pytest.fixture(scope="module")
def ret_result(prompt, cfg, small_graph, embedder, onto):
    return run_pipeline(prompt, cfg, approach="ret_eval", embedder=embedder,
                        onto=onto, graph=small_graph)


@pytest.fixture(scope="module")
def gnn_result(prompt, cfg, small_graph, embedder, onto):
    return run_pipeline(prompt, cfg, approach="gnn", embedder=embedder,
                        onto=onto, graph=small_graph)


class TestPromptLoading:
    def test_text_file(self, tmp_path):
        path = tmp_path / "walkthrough.txt"
        path.write_text("Remind me to water the plants.\n", encoding="utf-8")
        rec = load_prompt(path)
        assert rec.id == "walkthrough"
        assert rec.domain == "general"
        assert rec.text == "Remind me to water the plants."
        assert rec.token_count == 6

    def test_json_record_round_trip(self, tmp_path, prompt):
        path = tmp_path / "p1.json"
        path.write_text(json.dumps(prompt.to_dict()), encoding="utf-8")
        rec = load_prompt(path)
        assert rec == prompt

    def test_dataset_file_rejected_by_load_prompt(self, tmp_path, prompt):
        path = tmp_path / "prompts.json"
        path.write_text(json.dumps({"prompts": [prompt.to_dict()]}), encoding="utf-8")
        with pytest.raises(ValueError, match="dataset"):
            load_prompt(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_prompt(tmp_path / "absent.txt")

    def test_load_dataset_from_dir(self, tmp_path, prompt):
        other = replace(prompt, id="p2")
        (tmp_path / "prompts.json").write_text(
            json.dumps({"prompts": [prompt.to_dict(), other.to_dict()]}),
            encoding="utf-8",
        )
        records = load_dataset(tmp_path)
        assert [r.id for r in records] == ["p1", "p2"]

    def test_load_dataset_bare_list(self, tmp_path, prompt):
        path = tmp_path / "set.json"
        path.write_text(json.dumps([prompt.to_dict()]), encoding="utf-8")
        assert len(load_dataset(path)) == 1

    def test_duplicate_ids_rejected(self, tmp_path, prompt):
        path = tmp_path / "set.json"
        path.write_text(
            json.dumps([prompt.to_dict(), prompt.to_dict()]), encoding="utf-8"
        )
        with pytest.raises(ValueError, match="duplicate"):
            load_dataset(path)

    def test_packaged_dataset(self):
        from kgthreads.config import default_graph_path

        data_dir = default_graph_path().parent
        records = load_dataset(data_dir)
        assert len(records) == 30
        assert len({r.id for r in records}) == 30

    def test_record_validation(self):
        with pytest.raises(ValueError):
            PromptRecord(id="", domain="general", text="x")
        with pytest.raises(ValueError):
            PromptRecord(id="a", domain="astrology", text="x")
        with pytest.raises(ValueError):
            PromptRecord(id="a", domain="general", text="   ")

    def test_from_dict_defaults(self):
        rec = prompt_from_dict({"id": "a", "text": "plan the rollout now"})
        assert rec.domain == "general"
        assert rec.token_count == 4
        assert rec.entity_count == 0
        assert rec.expected_layer_span == 0


class TestPromptBuilders:
    def test_direct_prompt_mentions_entities(self, prompt):
        text = build_direct_prompt(prompt)
        assert f"User request: {prompt.text}" in text
        assert "User entities: alert service, sensor stream." in text
        assert INSTRUCTION_REQUEST_MARKER in text

    def test_direct_prompt_without_entities(self):
        rec = PromptRecord(id="bare", domain="general", text="Just help.")
        text = build_direct_prompt(rec)
        assert "User entities" not in text

    def test_instruction_prompt_lists_facts_by_layer(self, small_graph):
        triple = small_graph.triples[0]
        thread = thread_from_walk(
            small_graph, (triple,), (triple.subject, triple.object), score=0.5
        )
        text = build_instruction_prompt(small_graph, thread, "Do the thing.")
        s = small_graph.entity(triple.subject)
        o = small_graph.entity(triple.object)
        assert _FACTS_HEADER in text
        assert _FACTS_FOOTER in text
        assert f"{s.label} | {triple.predicate} | {o.label}" in text
        assert f"[{s.layer.to_name()}]" in text
        assert text.index(_FACTS_HEADER) < text.index(_FACTS_FOOTER)


class TestRender:
    def test_template_golden(self):
        g = KnowledgeGraph(
            entities=(
                Entity("a", "alert service", Layer.SYSTEM),
                Entity("b", "audit log", Layer.DATA),
                Entity("c", "token store", Layer.TECHNOLOGY),
            ),
            triples=(
                Triple("a", "stores", "b", provenance="domain"),
                Triple("b", "uses", "c", provenance="domain"),
            ),
        )
        thread = thread_from_walk(g, g.triples, ("a", "b", "c"), score=0.9)
        text = render_instructions(g, thread, "Audit the alerts. Be quick.")
        assert text.splitlines() == [
            "Plan for: Audit the alerts.",
            "Step 1: alert service — stores — audit log [data]",
            "Step 2: audit log — uses — token store [technology]",
        ]

    @staticmethod
    def one_step_thread(g):
        triple = g.triples[0]
        return thread_from_walk(g, (triple,), (triple.subject, triple.object))

    def test_provider_text_passes_through(self, small_graph):
        thread = self.one_step_thread(small_graph)
        provider = _Canned("1. Do it.\n2. Check it.")
        out = render_instructions(small_graph, thread, "Prompt.", provider)
        assert out == "1. Do it.\n2. Check it."
        assert len(provider.requests) == 1

    def test_blank_provider_output_rejected(self, small_graph):
        thread = self.one_step_thread(small_graph)
        with pytest.raises(ProviderError):
            render_instructions(small_graph, thread, "Prompt.", _Canned("   "))

    def test_empty_thread_rejected(self, small_graph):
        class _Hollow:
            triples = ()

            def __len__(self):
                return 0

        with pytest.raises(ValueError):
            render_instructions(small_graph, _Hollow(), "Prompt.")


class TestRmApproach:
    def test_provider_text_verbatim(self, prompt, cfg, embedder, onto):
        canned = "1. Mirror the request.\n2. Ship it."
        result = run_pipeline(
            prompt, cfg, approach="rm", embedder=embedder, onto=onto,
            completion=_Canned(canned),
        )
        assert result.instructions == canned
        assert result.approach == "rm"
        assert result.pruned is None
        assert result.enriched is None
        assert result.threads == ()
        assert result.reasoning is None
        assert result.search_report is None
        assert result.working_stats().node_count == 0
        assert result.degraded == ()

    def test_offline_provider_is_deterministic(self, prompt, cfg, embedder, onto):
        first = run_pipeline(prompt, cfg, approach="rm", embedder=embedder, onto=onto)
        second = run_pipeline(prompt, cfg, approach="rm", embedder=embedder, onto=onto)
        assert first.instructions == second.instructions
        assert any(
            line.startswith("1.") for line in first.instructions.splitlines()
        )

    def test_failing_provider_raises_stage_error(self, prompt, cfg, embedder, onto):
        with pytest.raises(StageError, match=r"\[render\]"):
            run_pipeline(prompt, cfg, approach="rm", embedder=embedder, onto=onto,
                         completion=_Failing())


class TestRetEvalApproach:
    def test_pipeline_shape(self, ret_result, prompt):
        assert ret_result.approach == "ret_eval"
        assert ret_result.prompt is prompt
        assert ret_result.pruned is not None
        assert ret_result.enriched is not None
        assert ret_result.reasoning is not None
        assert ret_result.search_report is not None
        assert ret_result.degraded == ()

    def test_search_report_echo(self, ret_result, cfg):
        report = ret_result.search_report
        assert report["seed"] == cfg.seed
        assert report["iterations"] == cfg.search.iterations
        assert report["tau_star"]["walk"] == list(
            ret_result.reasoning.thread.entity_walk
        )

    def test_offline_render_format(self, ret_result):
        lines = ret_result.instructions.splitlines()
        assert lines[0] == "Plan for: The alert service monitors the sensor stream."
        steps = [line for line in lines[1:] if line.startswith("Step ")]
        assert len(steps) == len(ret_result.reasoning.thread)
        for i, line in enumerate(steps, start=1):
            assert line.startswith(f"Step {i}: ")
            assert line.count(" — ") == 2
            assert line.rstrip().endswith("]")

    def test_working_graph_covers_explored(self, ret_result):
        explored = set(ret_result.search_report["explored_entities"])
        assert set(ret_result.working_graph.entities) == explored

    def test_determinism(self, prompt, cfg, small_graph, embedder, onto, ret_result):
        again = run_pipeline(prompt, cfg, approach="ret_eval", embedder=embedder,
                             onto=onto, graph=small_graph)
        assert again.instructions == ret_result.instructions
        assert json.dumps(again.search_report, sort_keys=True) == json.dumps(
            ret_result.search_report, sort_keys=True
        )
        assert again.report_row() == ret_result.report_row()

    def test_report_row_shape(self, ret_result):
        row = ret_result.report_row()
        assert set(row) == {
            "prompt_id", "domain", "approach", "seed", "effectiveness",
            "graph", "threads_formed", "degraded", "search",
        }
        assert set(row["effectiveness"]) == {"A", "C", "DS", "TS", "U", "UF", "E"}
        assert set(row["graph"]) == {
            "nodes", "edges", "density", "clustering", "layers_covered",
        }
        assert row["search"]["iterations"] == 60

    def test_report_row_timings(self, ret_result):
        row = ret_result.report_row(include_timings=True)
        assert {"extraction", "prune", "enrich", "traverse", "search", "render"} <= set(
            row["timings"]
        )

    def test_degraded_enrichment_falls_back(self, prompt, cfg, small_graph,
                                            embedder, onto):
        result = run_pipeline(prompt, cfg, approach="ret_eval", embedder=embedder,
                              onto=onto, graph=small_graph, completion=_Failing())
        assert "enrichment" in result.degraded
        assert result.enrichment is None
        assert set(result.enriched.entities) == set(result.pruned.entities)
        assert not any(eid.startswith("llm:") for eid in result.enriched.entities)
        assert result.instructions


class TestGnnApproach:
    def test_renders_best_thread(self, gnn_result):
        assert gnn_result.approach == "gnn"
        assert gnn_result.reasoning is None
        assert gnn_result.search_report is None
        assert gnn_result.threads
        best = gnn_result.threads[0]
        steps = [l for l in gnn_result.instructions.splitlines() if l.startswith("Step ")]
        assert len(steps) == len(best)

    def test_working_graph_is_thread_union(self, gnn_result):
        expected = {eid for th in gnn_result.threads for eid in th.entities()}
        assert set(gnn_result.working_graph.entities) == expected

    def test_report_row_has_no_search(self, gnn_result):
        assert "search" not in gnn_result.report_row()


@pytest.fixture(scope="module")
def starved(cfg, embedder, onto):
    # two dissimilar entities, no triples: nothing to traverse or search
    g = KnowledgeGraph(
        entities=(
            Entity("a", "alert service", Layer.SYSTEM),
            Entity("b", "token store", Layer.TECHNOLOGY),
        ),
        triples=(),
    )
    rec = PromptRecord(id="stub", domain="general",
                       text="Restart the alert service.")
    return run_pipeline(rec, cfg, approach="ret_eval", embedder=embedder,
                        onto=onto, graph=g, completion=_Canned(""))


class TestDegradedSearch:
    def test_degradation_chain(self, starved):
        assert starved.degraded == ("traversal", "search", "render")

    def test_direct_fallback_instructions(self, starved):
        assert any(
            line.startswith("1.") for line in starved.instructions.splitlines()
        )

    def test_empty_working_graph(self, starved):
        assert starved.working_stats().node_count == 0
        row = starved.report_row()
        assert row["graph"]["nodes"] == 0
        assert row["threads_formed"] == 0


class TestStageGraph:
    def test_stages_resolve(self, ret_result):
        assert stage_graph(ret_result, "k1d") is ret_result.pruned
        assert stage_graph(ret_result, "k1f") is ret_result.enriched
        assert stage_graph(ret_result, "mcts") is ret_result.working_graph

    def test_unknown_stage(self, ret_result):
        with pytest.raises(ValueError, match="unknown stage"):
            stage_graph(ret_result, "k9")

    def test_missing_stage_for_rm(self, prompt, cfg, embedder, onto):
        result = run_pipeline(prompt, cfg, approach="rm", embedder=embedder,
                              onto=onto, completion=_Canned("1. Go."))
        with pytest.raises(StageError, match=r"\[export\]"):
            stage_graph(result, "k1d")


class TestWriteTrace:
    def test_ret_eval_writes_five_stages(self, ret_result, tmp_path):
        written = write_trace(ret_result, tmp_path / "trace")
        names = sorted(p.name for p in written)
        assert names == ["k1_d.json", "k1_f.json", "k1_u.json",
                         "t_enr.json", "tau_star.json"]
        for path in written:
            json.loads(path.read_text(encoding="utf-8"))
        reloaded = load_graph(tmp_path / "trace" / "k1_f.json")
        assert set(reloaded.entities) == set(ret_result.enriched.entities)

    def test_gnn_writes_four_stages(self, gnn_result, tmp_path):
        written = write_trace(gnn_result, tmp_path / "trace")
        names = sorted(p.name for p in written)
        assert names == ["k1_d.json", "k1_f.json", "k1_u.json", "t_enr.json"]

    def test_rm_writes_one_stage(self, prompt, cfg, embedder, onto, tmp_path):
        result = run_pipeline(prompt, cfg, approach="rm", embedder=embedder,
                              onto=onto, completion=_Canned("1. Go."))
        written = write_trace(result, tmp_path / "trace")
        assert [p.name for p in written] == ["k1_u.json"]


class TestApproachValidation:
    def test_unknown_approach(self, prompt, cfg, embedder, onto):
        with pytest.raises(StageError, match=r"\[setup\]"):
            run_pipeline(prompt, cfg, approach="oracle", embedder=embedder, onto=onto)
