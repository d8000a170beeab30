"""End-to-end orchestration: prompt text in, scored instructions out.

Three approaches share the same plumbing:

  ret_eval  user thread -> prune -> enrich -> traverse -> tree search ->
            render the selected reasoning thread
  gnn       same through traversal, then render the best formed thread
  rm        completion provider prompted directly, no graph work

Enrichment and search failures degrade instead of aborting: the run
continues with whatever earlier stages produced and records which stages
fell back. The offline renderer and offline providers make every approach
fully deterministic for a given seed.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .config import RunConfig
from .effectiveness import EffectivenessReport, InstructionSet, score_all
from .embeddings import EmbeddingProvider, OfflineEmbedder, RemoteEmbedder
from .enrichment import (
    CompletionProvider,
    EnrichmentResult,
    HttpCompletionProvider,
    INSTRUCTION_REQUEST_MARKER,
    OfflineCompletionProvider,
    _FACTS_FOOTER,
    _FACTS_HEADER,
    enrich_with_result,
)
from .errors import EmptySearchError, ProviderError, StageError
from .extraction import UserKnowledgeThread, build_user_thread
from .gnn import GnnModel, encode, init_model, load_model
from .graph import (
    ORDERED_LAYERS,
    GraphStats,
    KnowledgeGraph,
    Layer,
    compute_stats,
    load_graph,
    save_graph,
)
from .mcts import ReasoningThread, run_mcts
from .ontology import DOMAIN_TAGS, Ontology, classify_unknown_layers, load_ontology
from .pruning import PruneResult, prune
from .reward import RewardBreakdown
from .traversal import KnowledgeThread, form_threads, propose_links

APPROACHES = ("ret_eval", "gnn", "rm")
TRACE_STAGES = ("k1_u", "k1_d", "k1_f", "t_enr", "tau_star")

MAX_THREAD_LENGTH = 6
THREAD_BEAM = 5


@dataclass(frozen=True)
class PromptRecord:
    id: str
    domain: str
    text: str
    entities: tuple[str, ...] = ()
    token_count: int = 0
    entity_count: int = 0
    expected_layer_span: int = 0

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("prompt id must be non-empty")
        if self.domain not in DOMAIN_TAGS:
            raise ValueError(f"unknown domain {self.domain!r}; expected one of {DOMAIN_TAGS}")
        if not self.text.strip():
            raise ValueError("prompt text must be non-empty")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "domain": self.domain,
            "text": self.text,
            "entities": list(self.entities),
            "token_count": self.token_count,
            "entity_count": self.entity_count,
            "expected_layer_span": self.expected_layer_span,
        }


def prompt_from_dict(raw: dict) -> PromptRecord:
    return PromptRecord(
        id=str(raw["id"]),
        domain=str(raw.get("domain", "general")),
        text=str(raw["text"]),
        entities=tuple(str(e) for e in raw.get("entities", ())),
        token_count=int(raw.get("token_count", len(str(raw["text"]).split()))),
        entity_count=int(raw.get("entity_count", len(raw.get("entities", ())))),
        expected_layer_span=int(raw.get("expected_layer_span", 0)),
    )


def load_prompt(path: str | Path) -> PromptRecord:
    """A single prompt: JSON record, or plain text named after its file."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    if path.suffix.lower() == ".json":
        raw = json.loads(path.read_text(encoding="utf-8"))
        if isinstance(raw, dict) and "prompts" in raw:
            raise ValueError(f"{path} is a dataset; pass it to load_dataset")
        return prompt_from_dict(raw)
    text = path.read_text(encoding="utf-8").strip()
    return PromptRecord(
        id=path.stem,
        domain="general",
        text=text,
        token_count=len(text.split()),
    )


def load_dataset(path: str | Path) -> tuple[PromptRecord, ...]:
    """A prompt collection: a prompts.json file or a directory holding one."""
    path = Path(path)
    if path.is_dir():
        path = path / "prompts.json"
    if not path.is_file():
        raise FileNotFoundError(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    records = raw["prompts"] if isinstance(raw, dict) else raw
    prompts = tuple(prompt_from_dict(r) for r in records)
    seen: set[str] = set()
    for p in prompts:
        if p.id in seen:
            raise ValueError(f"duplicate prompt id {p.id!r}")
        seen.add(p.id)
    return prompts


@dataclass
class PipelineResult:
    prompt: PromptRecord
    approach: str
    seed: int
    instructions: str
    effectiveness: EffectivenessReport
    user_thread: UserKnowledgeThread
    pruned: KnowledgeGraph | None = None
    enriched: KnowledgeGraph | None = None
    enrichment: EnrichmentResult | None = None
    threads: tuple[KnowledgeThread, ...] = ()
    reasoning: ReasoningThread | None = None
    search_report: dict | None = None
    working_graph: KnowledgeGraph | None = None
    degraded: tuple[str, ...] = ()
    timings: dict[str, float] = field(default_factory=dict)

    def working_stats(self) -> GraphStats:
        g = self.working_graph or KnowledgeGraph((), ())
        return compute_stats(g)

    def report_row(self, include_timings: bool = False) -> dict:
        stats = self.working_stats()
        row = {
            "prompt_id": self.prompt.id,
            "domain": self.prompt.domain,
            "approach": self.approach,
            "seed": self.seed,
            "effectiveness": self.effectiveness.csv_row(),
            "graph": {
                "nodes": stats.node_count,
                "edges": stats.edge_count,
                "density": round(stats.density, 6),
                "clustering": round(stats.average_clustering, 6),
                "layers_covered": stats.layers_covered,
            },
            "threads_formed": len(self.threads),
            "degraded": list(self.degraded),
        }
        if self.search_report is not None:
            row["search"] = {
                "iterations": self.search_report["iterations"],
                "nodes_expanded": self.search_report["nodes_expanded"],
                "paths_evaluated": self.search_report["paths_evaluated"],
            }
        if include_timings:
            row["timings"] = {k: round(v, 3) for k, v in self.timings.items()}
        return row


def build_embedder(cfg: RunConfig) -> EmbeddingProvider:
    if cfg.embed_endpoint:
        return RemoteEmbedder(cfg.embed_endpoint)
    return OfflineEmbedder()


def build_completion(cfg: RunConfig) -> CompletionProvider:
    if cfg.complete_endpoint:
        return HttpCompletionProvider(cfg.complete_endpoint)
    return OfflineCompletionProvider(seed=cfg.seed)


def build_model(cfg: RunConfig, embedder: EmbeddingProvider) -> GnnModel:
    if cfg.model_path is not None:
        return load_model(cfg.model_path)
    # Fixed seed: the encoder is a model artifact, not part of the run seed.
    return init_model(seed=0, input_dim=embedder.dimension)


def build_instruction_prompt(
    g: KnowledgeGraph, thread: KnowledgeThread, prompt_text: str
) -> str:
    """Provider prompt carrying the thread's facts grouped layer by layer."""
    by_layer: dict[Layer, list[str]] = {}
    for triple in thread.triples:
        s = g.entity(triple.subject)
        o = g.entity(triple.object)
        by_layer.setdefault(s.layer, []).append(
            f"{s.label} | {triple.predicate} | {o.label}"
        )
    lines = [
        "You are turning a reasoning thread into implementation instructions.",
        f"User request: {prompt_text}",
        "",
        _FACTS_HEADER,
    ]
    for layer in (*ORDERED_LAYERS, Layer.UNKNOWN):
        facts = by_layer.get(layer)
        if not facts:
            continue
        lines.append(f"[{layer.to_name()}]")
        lines.extend(facts)
    lines.append(_FACTS_FOOTER)
    lines.append(
        f"{INSTRUCTION_REQUEST_MARKER} as numbered steps, one per fact, in path order."
    )
    return "\n".join(lines)


def build_direct_prompt(prompt: PromptRecord) -> str:
    """Graph-free provider prompt: the request plus a reasoning scaffold."""
    lines = [
        "You are writing implementation instructions from a user request.",
        f"User request: {prompt.text}",
        "",
    ]
    if prompt.entities:
        lines.append("User entities: " + ", ".join(prompt.entities) + ".")
    lines.append(
        "Reason about the business goal, the supporting services, the data"
        " they exchange, and the concrete technology, in that order."
    )
    lines.append(f"{INSTRUCTION_REQUEST_MARKER} as numbered steps.")
    return "\n".join(lines)


def _first_sentence(text: str) -> str:
    for sep in (".", "!", "?", "\n"):
        idx = text.find(sep)
        if idx > 0:
            return text[:idx].strip()
    return text.strip()


def render_instructions(
    g: KnowledgeGraph,
    thread: KnowledgeThread,
    prompt_text: str,
    provider: CompletionProvider | None = None,
    max_tokens: int = 512,
) -> str:
    """Instruction text for a thread; template when no provider is given."""
    if not len(thread):
        raise ValueError("cannot render an empty thread")
    if provider is not None:
        request = build_instruction_prompt(g, thread, prompt_text)
        response = provider.complete(request, max_tokens)
        if not isinstance(response, str) or not response.strip():
            raise ProviderError("completion provider returned no instruction text")
        return response
    lines = [f"Plan for: {_first_sentence(prompt_text)}."]
    for i, triple in enumerate(thread.triples, start=1):
        s = g.entity(triple.subject)
        o = g.entity(triple.object)
        lines.append(
            f"Step {i}: {s.label} — {triple.predicate} — {o.label} [{o.layer.to_name()}]"
        )
    return "\n".join(lines)


def run_pipeline(
    prompt: PromptRecord,
    cfg: RunConfig,
    approach: str | None = None,
    embedder: EmbeddingProvider | None = None,
    completion: CompletionProvider | None = None,
    onto: Ontology | None = None,
    graph: KnowledgeGraph | None = None,
    model: GnnModel | None = None,
) -> PipelineResult:
    """Run one prompt through one approach and score the result."""
    approach = approach or cfg.approach
    if approach not in APPROACHES:
        raise StageError("setup", f"unknown approach {approach!r}")
    embedder = embedder or build_embedder(cfg)
    onto = onto or load_ontology()

    timings: dict[str, float] = {}
    degraded: list[str] = []

    def timed(stage: str, start: float) -> None:
        timings[stage] = timings.get(stage, 0.0) + (time.perf_counter() - start)

    t0 = time.perf_counter()
    try:
        user_thread = build_user_thread(prompt.text, onto, embedder)
    except Exception as exc:  # pragma: no cover - extraction is total
        raise StageError("extraction", str(exc)) from exc
    timed("extraction", t0)

    if approach == "rm":
        completion = completion or build_completion(cfg)
        t0 = time.perf_counter()
        try:
            instructions = completion.complete(
                build_direct_prompt(prompt), cfg.enrichment.max_completion_tokens
            )
        except ProviderError as exc:
            raise StageError("render", str(exc)) from exc
        if not instructions.strip():
            raise StageError("render", "completion provider returned no instruction text")
        timed("render", t0)
        effectiveness = _score(instructions, prompt, approach, onto, embedder)
        return PipelineResult(
            prompt=prompt,
            approach=approach,
            seed=cfg.seed,
            instructions=instructions,
            effectiveness=effectiveness,
            user_thread=user_thread,
            working_graph=KnowledgeGraph((), ()),
            degraded=tuple(degraded),
            timings=timings,
        )

    if graph is None:
        t0 = time.perf_counter()
        try:
            graph = load_graph(cfg.graph_path)
        except Exception as exc:
            raise StageError("load-graph", str(exc)) from exc
        timed("load-graph", t0)

    t0 = time.perf_counter()
    pruned_result: PruneResult = prune(graph, user_thread, embedder, cfg.prune)
    k1_d = pruned_result.graph
    timed("prune", t0)

    t0 = time.perf_counter()
    enrichment_result: EnrichmentResult | None = None
    completion = completion or build_completion(cfg)
    try:
        k1_f, enrichment_result = enrich_with_result(
            k1_d, user_thread, completion, onto, embedder, cfg.enrichment
        )
    except ProviderError:
        degraded.append("enrichment")
        k1_f = k1_d
    timed("enrich", t0)

    t0 = time.perf_counter()
    k1_f = classify_unknown_layers(k1_f, onto, embedder)
    model = model or build_model(cfg, embedder)
    embeddings = encode(k1_f, embedder, model)
    proposals = propose_links(embeddings, k1_f, cfg.links)
    search_graph = k1_f.with_additions(triples=proposals)
    threads = tuple(
        form_threads(
            search_graph, user_thread, embeddings,
            max_len=MAX_THREAD_LENGTH, beam=THREAD_BEAM,
        )
    )
    if not threads:
        degraded.append("traversal")
    timed("traverse", t0)

    reasoning: ReasoningThread | None = None
    search_report: dict | None = None
    working = None
    if approach == "ret_eval":
        t0 = time.perf_counter()
        try:
            reasoning, search_report = run_mcts(
                search_graph,
                user_thread,
                embedder,
                onto,
                search_cfg=cfg.search,
                reward_cfg=cfg.reward,
            )
            working = search_graph.induced_subgraph(search_report["explored_entities"])
        except EmptySearchError:
            degraded.append("search")
        timed("search", t0)

    if approach == "gnn" or (approach == "ret_eval" and reasoning is None):
        if threads:
            working = working or search_graph.induced_subgraph(
                {eid for th in threads for eid in th.entities()}
            )
    if working is None:
        working = KnowledgeGraph((), ())

    t0 = time.perf_counter()
    render_provider = completion if cfg.complete_endpoint else None
    selected: KnowledgeThread | None = None
    if approach == "ret_eval" and reasoning is not None:
        selected = reasoning.thread
    elif threads:
        selected = threads[0]
    if selected is not None and len(selected):
        try:
            instructions = render_instructions(
                search_graph, selected, prompt.text, render_provider,
                max_tokens=cfg.enrichment.max_completion_tokens,
            )
        except ProviderError:
            degraded.append("render")
            instructions = render_instructions(search_graph, selected, prompt.text, None)
    else:
        # Nothing to walk: fall back to graph-free generation.
        degraded.append("render")
        offline = OfflineCompletionProvider(seed=cfg.seed)
        instructions = offline.complete(
            build_direct_prompt(prompt), cfg.enrichment.max_completion_tokens
        )
    timed("render", t0)

    effectiveness = _score(instructions, prompt, approach, onto, embedder)
    return PipelineResult(
        prompt=prompt,
        approach=approach,
        seed=cfg.seed,
        instructions=instructions,
        effectiveness=effectiveness,
        user_thread=user_thread,
        pruned=k1_d,
        enriched=k1_f,
        enrichment=enrichment_result,
        threads=threads,
        reasoning=reasoning,
        search_report=search_report,
        working_graph=working,
        degraded=tuple(degraded),
        timings=timings,
    )


def _score(
    instructions: str,
    prompt: PromptRecord,
    approach: str,
    onto: Ontology,
    embedder: EmbeddingProvider,
) -> EffectivenessReport:
    ins = InstructionSet(text=instructions, prompt=prompt.text, approach=approach)
    try:
        return score_all(ins, onto, embedder, prompt.domain)
    except ValueError as exc:
        raise StageError("score", str(exc)) from exc


def stage_graph(result: PipelineResult, stage: str) -> KnowledgeGraph:
    """The graph artifact behind one exported pipeline stage."""
    if stage == "k1d":
        g = result.pruned
    elif stage == "k1f":
        g = result.enriched
    elif stage == "mcts":
        g = result.working_graph
    else:
        raise ValueError(f"unknown stage {stage!r}; expected k1d, k1f, or mcts")
    if g is None:
        raise StageError("export", f"stage {stage} was not produced by this run")
    return g


def write_trace(result: PipelineResult, out_dir: str | Path) -> list[Path]:
    """Persist per-stage artifacts; ret_eval writes all five stages."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, payload: str) -> None:
        path = out_dir / f"{name}.json"
        path.write_text(payload, encoding="utf-8")
        written.append(path)

    emit("k1_u", json.dumps(result.user_thread.to_dict(), indent=1, sort_keys=True))
    if result.pruned is not None:
        emit("k1_d", save_graph(result.pruned))
    if result.enriched is not None:
        emit("k1_f", save_graph(result.enriched))
    if result.pruned is not None:
        emit(
            "t_enr",
            json.dumps([th.to_dict() for th in result.threads], indent=1, sort_keys=True),
        )
    if result.search_report is not None:
        emit("tau_star", json.dumps(result.search_report, indent=1, sort_keys=True))
    return written
