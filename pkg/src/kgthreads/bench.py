"""Benchmark harness: run approaches over a prompt dataset and report.

Each (prompt, approach) pair runs in isolation with its own derived seed
(base seed XOR the first eight bytes of the prompt id's SHA-256), so
serial and parallel execution would produce identical reports. Reports
omit wall-clock timings unless asked, keeping the JSON byte-stable across
runs and machines.
"""

from __future__ import annotations

import csv
import hashlib
import json
import statistics
import time
from pathlib import Path

from .config import RunConfig
from .effectiveness import OVERALL_WEIGHTS
from .errors import KgThreadsError
from .gnn import GnnModel
from .graph import KnowledgeGraph, load_graph
from .ontology import Ontology, load_ontology
from .pipeline import APPROACHES, PromptRecord, build_embedder, build_model, run_pipeline

GRAPH_METRICS = ("nodes", "edges", "density", "clustering", "layers_covered")
DIMENSIONS = ("A", "C", "DS", "TS", "U", "UF", "E")

CSV_FIELDS = (
    "prompt_id",
    "domain",
    "approach",
    "seed",
    *DIMENSIONS,
    *GRAPH_METRICS,
    "threads_formed",
    "degraded",
    "error",
)


def derive_seed(base_seed: int, prompt_id: str) -> int:
    digest = hashlib.sha256(prompt_id.encode("utf-8")).digest()
    return base_seed ^ int.from_bytes(digest[:8], "big")


def _mean_stdev(values: list[float]) -> dict:
    if not values:
        return {"mean": None, "stdev": None}
    mean = statistics.mean(values)
    stdev = statistics.stdev(values) if len(values) > 1 else 0.0
    return {"mean": round(mean, 6), "stdev": round(stdev, 6)}


def _pearson(xs: list[float], ys: list[float]) -> float | None:
    if len(xs) < 2:
        return None
    try:
        return round(statistics.correlation(xs, ys), 6)
    except statistics.StatisticsError:
        return None  # zero variance on either side


def aggregate_rows(rows: list[dict]) -> tuple[dict, dict]:
    """Per-approach mean/stdev aggregates and metric-vs-E correlations."""
    by_approach: dict[str, list[dict]] = {}
    for row in rows:
        if "error" in row:
            continue
        by_approach.setdefault(row["approach"], []).append(row)

    aggregates: dict[str, dict] = {}
    correlations: dict[str, dict] = {}
    for approach in sorted(by_approach):
        ok = by_approach[approach]
        aggregates[approach] = {
            "count": len(ok),
            "effectiveness": {
                dim: _mean_stdev([r["effectiveness"][dim] for r in ok])
                for dim in DIMENSIONS
            },
            "graph": {
                metric: _mean_stdev([float(r["graph"][metric]) for r in ok])
                for metric in GRAPH_METRICS
            },
        }
        es = [r["effectiveness"]["E"] for r in ok]
        correlations[approach] = {
            metric: _pearson([float(r["graph"][metric]) for r in ok], es)
            for metric in GRAPH_METRICS
        }
    return aggregates, correlations


def bench(
    prompts: tuple[PromptRecord, ...],
    cfg: RunConfig,
    approaches: tuple[str, ...] = APPROACHES,
    include_timings: bool = False,
    graph: KnowledgeGraph | None = None,
    onto: Ontology | None = None,
    model: GnnModel | None = None,
) -> dict:
    """Run every (prompt, approach) pair and assemble the full report."""
    if not prompts:
        raise ValueError("dataset is empty")
    for approach in approaches:
        if approach not in APPROACHES:
            raise ValueError(f"unknown approach {approach!r}")

    embedder = build_embedder(cfg)
    onto = onto or load_ontology()
    if graph is None:
        graph = load_graph(cfg.graph_path)
    model = model or build_model(cfg, embedder)

    rows: list[dict] = []
    failures = 0
    for prompt in prompts:
        run_cfg = cfg.with_seed(derive_seed(cfg.seed, prompt.id))
        for approach in approaches:
            started = time.perf_counter()
            try:
                result = run_pipeline(
                    prompt,
                    run_cfg,
                    approach,
                    embedder=embedder,
                    onto=onto,
                    graph=graph,
                    model=model,
                )
                row = result.report_row(include_timings=include_timings)
            except KgThreadsError as exc:
                failures += 1
                row = {
                    "prompt_id": prompt.id,
                    "domain": prompt.domain,
                    "approach": approach,
                    "seed": run_cfg.seed,
                    "error": str(exc),
                }
            if include_timings:
                row.setdefault("timings", {})["total"] = round(
                    time.perf_counter() - started, 3
                )
            rows.append(row)

    aggregates, correlations = aggregate_rows(rows)
    return {
        "base_seed": cfg.seed,
        "approaches": list(approaches),
        "prompt_count": len(prompts),
        "overall_weights": dict(OVERALL_WEIGHTS),
        "rows": rows,
        "aggregates": aggregates,
        "correlations": correlations,
        "failures": failures,
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True) + "\n"


def write_report(report: dict, out_path: str | Path) -> tuple[Path, Path]:
    """Write the JSON report and a flat CSV of its rows side by side."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(report_to_json(report), encoding="utf-8")

    csv_path = out_path.with_suffix(".csv")
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, extrasaction="ignore")
        writer.writeheader()
        for row in report["rows"]:
            flat = {k: row.get(k, "") for k in ("prompt_id", "domain", "approach", "seed")}
            flat["degraded"] = "|".join(row.get("degraded", ()))
            flat["error"] = row.get("error", "")
            for dim in DIMENSIONS:
                flat[dim] = row.get("effectiveness", {}).get(dim, "")
            for metric in GRAPH_METRICS:
                flat[metric] = row.get("graph", {}).get(metric, "")
            flat["threads_formed"] = row.get("threads_formed", "")
            writer.writerow(flat)
    return out_path, csv_path
