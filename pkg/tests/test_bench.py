"""Benchmark harness: seed derivation, aggregation, reports, CSV export."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import statistics
from dataclasses import replace

import pytest

from kgthreads.bench import (
    CSV_FIELDS,
    aggregate_rows,
    bench,
    derive_seed,
    report_to_json,
    write_report,
)
from kgthreads.config import load_config
from kgthreads.pipeline import PromptRecord

from conftest import build_random_graph


def make_row(prompt_id: str, approach: str, e: float, nodes: int, **dims) -> dict:
    eff = {d: dims.get(d, 0.5) for d in ("A", "C", "DS", "TS", "U", "UF")}
    eff["E"] = e
    return {
        "prompt_id": prompt_id,
        "domain": "general",
        "approach": approach,
        "seed": 1,
        "effectiveness": eff,
        "graph": {
            "nodes": nodes,
            "edges": nodes,
            "density": 0.1,
            "clustering": 0.0,
            "layers_covered": 2,
        },
        "threads_formed": 1,
        "degraded": [],
    }


class TestDeriveSeed:
    def test_formula(self):
        digest = hashlib.sha256(b"healthcare-01").digest()
        expected = 5 ^ int.from_bytes(digest[:8], "big")
        assert derive_seed(5, "healthcare-01") == expected

    def test_stable_across_calls(self):
        assert derive_seed(0, "p1") == derive_seed(0, "p1")

    def test_distinct_prompts_diverge(self):
        assert derive_seed(0, "p1") != derive_seed(0, "p2")

    def test_base_seed_matters(self):
        assert derive_seed(0, "p1") != derive_seed(1, "p1")


class TestAggregation:
    def test_single_row_mean_is_value_stdev_zero(self):
        rows = [make_row("p1", "rm", e=0.61, nodes=7)]
        aggregates, _ = aggregate_rows(rows)
        agg = aggregates["rm"]
        assert agg["count"] == 1
        assert agg["effectiveness"]["E"] == {"mean": 0.61, "stdev": 0.0}
        assert agg["graph"]["nodes"] == {"mean": 7.0, "stdev": 0.0}

    def test_two_row_mean_and_stdev(self):
        rows = [
            make_row("p1", "rm", e=0.4, nodes=4),
            make_row("p2", "rm", e=0.6, nodes=8),
        ]
        aggregates, _ = aggregate_rows(rows)
        agg = aggregates["rm"]
        assert agg["effectiveness"]["E"]["mean"] == pytest.approx(0.5)
        assert agg["effectiveness"]["E"]["stdev"] == pytest.approx(
            statistics.stdev([0.4, 0.6]), abs=1e-6
        )

    def test_constant_metric_correlation_is_none(self):
        rows = [
            make_row("p1", "rm", e=0.4, nodes=5),
            make_row("p2", "rm", e=0.6, nodes=5),
        ]
        _, correlations = aggregate_rows(rows)
        assert correlations["rm"]["nodes"] is None

    def test_two_row_pearson_hand_value(self):
        rows = [
            make_row("p1", "rm", e=0.4, nodes=4),
            make_row("p2", "rm", e=0.6, nodes=8),
        ]
        _, correlations = aggregate_rows(rows)
        # two distinct points always correlate perfectly
        assert correlations["rm"]["nodes"] == pytest.approx(1.0)
        rows[1]["graph"]["nodes"] = 2
        _, correlations = aggregate_rows(rows)
        assert correlations["rm"]["nodes"] == pytest.approx(-1.0)

    def test_hand_computed_three_point_pearson(self):
        es = [0.2, 0.5, 0.9]
        ns = [3, 4, 9]
        rows = [
            make_row(f"p{i}", "rm", e=e, nodes=n)
            for i, (e, n) in enumerate(zip(es, ns))
        ]
        _, correlations = aggregate_rows(rows)
        mx, my = statistics.mean(ns), statistics.mean(es)
        num = sum((x - mx) * (y - my) for x, y in zip(ns, es))
        den = math.sqrt(
            sum((x - mx) ** 2 for x in ns) * sum((y - my) ** 2 for y in es)
        )
        assert correlations["rm"]["nodes"] == pytest.approx(num / den, abs=1e-6)

    def test_error_rows_excluded(self):
        rows = [
            make_row("p1", "rm", e=0.4, nodes=4),
            {
                "prompt_id": "p2",
                "domain": "general",
                "approach": "rm",
                "seed": 9,
                "error": "[search] nothing to expand",
            },
        ]
        aggregates, _ = aggregate_rows(rows)
        assert aggregates["rm"]["count"] == 1

    def test_approaches_sorted(self):
        rows = [
            make_row("p1", "rm", e=0.4, nodes=4),
            make_row("p1", "gnn", e=0.5, nodes=5),
            make_row("p1", "ret_eval", e=0.6, nodes=6),
        ]
        aggregates, correlations = aggregate_rows(rows)
        assert list(aggregates) == ["gnn", "ret_eval", "rm"]
        assert list(correlations) == ["gnn", "ret_eval", "rm"]


@pytest.fixture(scope="module")
def bench_setup(embedder, onto):
    cfg = load_config(None, env={})
    cfg = replace(cfg, search=replace(cfg.search, iterations=40))
    graph = build_random_graph(seed=11, n_nodes=10, n_edges=14)
    prompts = (
        PromptRecord(
            id="t1",
            domain="technology",
            text="The alert service monitors the sensor stream.",
            entities=("alert service", "sensor stream"),
        ),
        PromptRecord(
            id="t2",
            domain="general",
            text="Route alerts from the message broker to the dashboard view.",
            entities=("message broker", "dashboard view"),
        ),
    )
    return cfg, graph, prompts


@pytest.fixture(scope="module")
def small_report(bench_setup, onto):
    cfg, graph, prompts = bench_setup
    return bench(prompts, cfg, approaches=("ret_eval", "rm"), graph=graph, onto=onto)


class TestBenchRun:
    def test_report_shape(self, small_report):
        assert set(small_report) == {
            "base_seed", "approaches", "prompt_count", "overall_weights",
            "rows", "aggregates", "correlations", "failures",
        }
        assert small_report["prompt_count"] == 2
        assert small_report["approaches"] == ["ret_eval", "rm"]
        assert len(small_report["rows"]) == 4
        assert small_report["failures"] == 0

    def test_rows_use_derived_seeds(self, small_report, bench_setup):
        cfg, _, prompts = bench_setup
        for row in small_report["rows"]:
            assert row["seed"] == derive_seed(cfg.seed, row["prompt_id"])

    def test_json_is_deterministic(self, small_report, bench_setup, onto):
        cfg, graph, prompts = bench_setup
        again = bench(prompts, cfg, approaches=("ret_eval", "rm"), graph=graph,
                      onto=onto)
        assert report_to_json(again) == report_to_json(small_report)

    def test_empty_dataset_rejected(self, bench_setup, onto):
        cfg, graph, _ = bench_setup
        with pytest.raises(ValueError, match="empty"):
            bench((), cfg, approaches=("rm",), graph=graph, onto=onto)

    def test_unknown_approach_rejected(self, bench_setup, onto):
        cfg, graph, prompts = bench_setup
        with pytest.raises(ValueError, match="unknown approach"):
            bench(prompts, cfg, approaches=("oracle",), graph=graph, onto=onto)


class TestReportFiles:
    def test_write_report_round_trip(self, small_report, tmp_path):
        json_path, csv_path = write_report(small_report, tmp_path / "out" / "r.json")
        assert json_path.is_file() and csv_path.is_file()
        assert csv_path.suffix == ".csv"
        parsed = json.loads(json_path.read_text(encoding="utf-8"))
        assert parsed["prompt_count"] == small_report["prompt_count"]

    def test_csv_shape(self, small_report, tmp_path):
        _, csv_path = write_report(small_report, tmp_path / "r.json")
        with csv_path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(small_report["rows"])
        assert tuple(rows[0].keys()) == CSV_FIELDS
        for raw, flat in zip(small_report["rows"], rows):
            assert flat["prompt_id"] == raw["prompt_id"]
            assert flat["approach"] == raw["approach"]
            assert flat["E"] == str(raw["effectiveness"]["E"])
            assert flat["degraded"] == "|".join(raw["degraded"])
            assert flat["error"] == ""

    def test_csv_error_row(self, tmp_path):
        report = {
            "rows": [
                {
                    "prompt_id": "p9",
                    "domain": "general",
                    "approach": "rm",
                    "seed": 3,
                    "error": "[render] provider offline",
                }
            ]
        }
        _, csv_path = write_report(report | {"prompt_count": 1}, tmp_path / "r.json")
        with csv_path.open(newline="", encoding="utf-8") as fh:
            row = next(csv.DictReader(fh))
        assert row["error"] == "[render] provider offline"
        assert row["E"] == ""
        assert row["nodes"] == ""
