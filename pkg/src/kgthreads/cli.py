"""Command-line interface.

Installed as both ``kgthreads`` and ``kg``. Subcommands:

  stats <file>                         per-layer structural statistics
  run --prompt F --approach A ...      one pipeline run, optional trace
  bench --dataset D --out report.json  full benchmark, JSON + CSV
  export-graph --stage S --prompt F    node-link JSON of a pipeline stage
  score --instructions F --prompt F    effectiveness report for a text

Exit codes: 0 success, 1 runtime failure (stage-tagged message on stderr),
2 usage errors (argparse).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import bench, write_report
from .config import RunConfig, load_config
from .effectiveness import InstructionSet, score_all
from .embeddings import OfflineEmbedder
from .errors import KgThreadsError
from .graph import compute_stats, export_node_link, load_graph
from .ontology import DOMAIN_TAGS, load_ontology
from .pipeline import (
    APPROACHES,
    load_dataset,
    load_prompt,
    run_pipeline,
    stage_graph,
    write_trace,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kg", description="Layered knowledge-thread pipeline workbench."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_stats = sub.add_parser("stats", help="structural statistics of a graph file")
    p_stats.add_argument("graph", help="graph JSON file")

    p_run = sub.add_parser("run", help="run one prompt through one approach")
    p_run.add_argument("--prompt", required=True, help="prompt file (.txt or .json)")
    p_run.add_argument("--approach", choices=APPROACHES, default=None)
    p_run.add_argument("--config", default=None, help="INI config file")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--trace", action="store_true", help="persist stage artifacts")
    p_run.add_argument(
        "--trace-dir", default=None, help="trace output directory (default traces/<id>_<approach>)"
    )
    p_run.add_argument("--timings", action="store_true", help="include stage timings")

    p_bench = sub.add_parser("bench", help="benchmark approaches over a dataset")
    p_bench.add_argument("--dataset", required=True, help="prompts.json or its directory")
    p_bench.add_argument(
        "--approaches", nargs="+", choices=APPROACHES, default=list(APPROACHES)
    )
    p_bench.add_argument("--out", required=True, help="report JSON path (CSV written beside)")
    p_bench.add_argument("--config", default=None)
    p_bench.add_argument("--seed", type=int, default=None)
    p_bench.add_argument("--timings", action="store_true")

    p_export = sub.add_parser("export-graph", help="export a pipeline stage graph")
    p_export.add_argument("--stage", required=True, choices=("k1d", "k1f", "mcts"))
    p_export.add_argument("--format", choices=("nodelink",), default="nodelink")
    p_export.add_argument("--prompt", required=True)
    p_export.add_argument("--config", default=None)
    p_export.add_argument("--seed", type=int, default=None)
    p_export.add_argument("--out", default=None, help="output file (default stdout)")

    p_score = sub.add_parser("score", help="score an instruction text")
    p_score.add_argument("--instructions", required=True, help="instruction text file")
    p_score.add_argument("--prompt", required=True, help="prompt file (.txt or .json)")
    p_score.add_argument("--domain", required=True, choices=DOMAIN_TAGS)

    return parser


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _cmd_stats(args) -> int:
    stats = compute_stats(load_graph(args.graph))
    print(f"{'layer':<12} {'entities':>9} {'intra_triples':>14} {'avg_degree':>11}")
    for row in stats.per_layer:
        print(
            f"{row.layer.to_name():<12} {row.entity_count:>9} "
            f"{row.intra_triples:>14} {row.intra_degree:>11.2f}"
        )
    print(
        f"{'total':<12} {stats.node_count:>9} {stats.edge_count:>14} "
        f"{stats.average_degree:>11.2f}"
    )
    print(
        f"density={stats.density:.6f} clustering={stats.average_clustering:.6f} "
        f"layers_covered={stats.layers_covered}"
    )
    return 0


def _cmd_run(args) -> int:
    cfg = _load_run_config(args)
    prompt = load_prompt(args.prompt)
    approach = args.approach or cfg.approach

    print(f"# approach={approach} seed={cfg.seed} config={args.config or 'defaults'}")
    print(f"# graph={cfg.graph_path}")
    print(
        f"# prune: threshold={cfg.prune.threshold if cfg.prune.threshold is not None else 'auto'}"
        f" hops={cfg.prune.hops}"
    )
    print(
        f"# search: iterations={cfg.search.iterations} exploration={cfg.search.exploration}"
        f" max_actions={cfg.search.max_actions}"
    )
    print(f"# reward: weights={','.join(str(w) for w in cfg.reward.weights)}")

    result = run_pipeline(prompt, cfg, approach)
    print()
    print(result.instructions)
    print()
    row = result.report_row(include_timings=args.timings)
    print("report:", json.dumps(row, sort_keys=True))
    if args.trace:
        trace_dir = Path(args.trace_dir or f"traces/{prompt.id}_{approach}")
        written = write_trace(result, trace_dir)
        for path in written:
            print(f"trace: {path}")
    return 0


def _cmd_bench(args) -> int:
    cfg = _load_run_config(args)
    prompts = load_dataset(args.dataset)
    report = bench(
        prompts, cfg, approaches=tuple(args.approaches), include_timings=args.timings
    )
    json_path, csv_path = write_report(report, args.out)
    print(f"wrote {json_path} and {csv_path}")
    for approach, agg in report["aggregates"].items():
        e = agg["effectiveness"]["E"]
        print(
            f"{approach}: n={agg['count']} E={e['mean']} ±{e['stdev']} "
            f"layers={agg['graph']['layers_covered']['mean']}"
        )
    if report["failures"]:
        print(f"failures: {report['failures']}", file=sys.stderr)
    return 0


def _cmd_export(args) -> int:
    cfg = _load_run_config(args)
    prompt = load_prompt(args.prompt)
    result = run_pipeline(prompt, cfg, "ret_eval")
    payload = json.dumps(
        export_node_link(stage_graph(result, args.stage)), indent=1, sort_keys=True
    )
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(payload)
    return 0


def _cmd_score(args) -> int:
    instructions = Path(args.instructions).read_text(encoding="utf-8")
    prompt = load_prompt(args.prompt)
    ins = InstructionSet(text=instructions, prompt=prompt.text)
    report = score_all(ins, load_ontology(), OfflineEmbedder(), args.domain)
    print(json.dumps(report.to_dict(), indent=1, sort_keys=True))
    return 0


_COMMANDS = {
    "stats": _cmd_stats,
    "run": _cmd_run,
    "bench": _cmd_bench,
    "export-graph": _cmd_export,
    "score": _cmd_score,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # Allow "kg stats ..." spelled as "kgthreads kg stats ...".
    if argv and argv[0] == "kg":
        argv = argv[1:]
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except KgThreadsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: [io] file not found: {exc}", file=sys.stderr)
        return 1
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: [input] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
