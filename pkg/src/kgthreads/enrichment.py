"""Graph enrichment through a pluggable text-completion provider.

The provider is asked for new candidate facts in a pipe-delimited line format
("subject | relation | object"), and every returned line runs a filter
gauntlet: arity, exact duplicates, near-duplicates, domain fit, and the
acceptance cap. Providers come in three flavors: an HTTP client, a fixture
reader keyed by prompt hash, and a deterministic offline synthesizer that
keeps the whole pipeline runnable with no network or model host.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .embeddings import EmbeddingProvider, cosine
from .errors import ProviderError
from .extraction import UserKnowledgeThread, normalize_relation
from .graph import Entity, KnowledgeGraph, Triple, normalize_label
from .ontology import Ontology, classify_entity

REJECT_REASONS = ("duplicate", "near-duplicate", "off-domain", "malformed", "over-limit")

# Recognizable request phrases; the offline synthesizer dispatches on them.
FACT_REQUEST_MARKER = "Propose new facts"
INSTRUCTION_REQUEST_MARKER = "Write implementation instructions"

_FACTS_HEADER = "Known facts, one per line:"
_FACTS_FOOTER = "End of facts."


@dataclass(frozen=True)
class EnrichmentConfig:
    limit: int = 15
    near_duplicate_cosine: float = 0.95
    off_domain_floor: float = 0.2
    max_prompt_tokens: int = 1800
    max_completion_tokens: int = 512

    def __post_init__(self) -> None:
        if self.limit < 1:
            raise ValueError(f"limit must be at least 1, got {self.limit}")
        if self.max_prompt_tokens < 50:
            raise ValueError("max_prompt_tokens must leave room for the request text")


@dataclass(frozen=True)
class RejectedLine:
    line: str
    reason: str


@dataclass
class EnrichmentResult:
    accepted: list[Triple] = field(default_factory=list)
    new_entities: list[Entity] = field(default_factory=list)
    rejected: list[RejectedLine] = field(default_factory=list)

    def rejection_counts(self) -> dict[str, int]:
        counts = {reason: 0 for reason in REJECT_REASONS}
        for rej in self.rejected:
            counts[rej.reason] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "accepted": [[t.subject, t.predicate, t.object] for t in self.accepted],
            "new_entities": [[e.id, e.label, e.layer.to_name()] for e in self.new_entities],
            "rejected": [[r.line, r.reason] for r in self.rejected],
        }


class CompletionProvider:
    """Text completion capability; implementations speak plain strings."""

    identity: str
    deterministic: bool

    def complete(self, prompt: str, max_tokens: int) -> str:
        raise NotImplementedError


class HttpCompletionProvider(CompletionProvider):
    """POSTs to {endpoint}/complete; {"prompt","max_tokens"} in, {"text"} out."""

    deterministic = False

    def __init__(self, endpoint: str, timeout: float = 30.0) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.identity = f"http({self.endpoint})"

    def complete(self, prompt: str, max_tokens: int) -> str:
        try:
            resp = requests.post(
                f"{self.endpoint}/complete",
                json={"prompt": prompt, "max_tokens": max_tokens},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            payload = resp.json()
            return str(payload["text"])
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise ProviderError(f"completion request failed: {exc}") from exc


class OfflineCompletionProvider(CompletionProvider):
    """Deterministic rule-based stand-in for a language model.

    Fact requests get pipe-format lines pairing prompt entities with a fixed
    catalog of concrete technology components. Instruction requests get
    numbered steps templated from the thread facts in the prompt. Anything
    else gets an empty response.
    """

    deterministic = True

    # (partner component, relation used when pairing a seed entity with it)
    TECH_CATALOG = (
        ("data pipeline", "uses"),
        ("rest api", "integrates_with"),
        ("message queue", "transmits"),
        ("time series database", "stores"),
        ("edge gateway", "uses"),
        ("cloud platform", "hosts"),
        ("mobile app", "notifies"),
        ("analytics engine", "analyzes"),
        ("notification service", "notifies"),
        ("access control service", "secures"),
        ("encryption module", "secures"),
        ("monitoring dashboard", "visualizes"),
        ("machine learning model", "predicts"),
        ("container runtime", "hosts"),
        ("backup service", "stores"),
    )

    _STEP_TEMPLATES = {
        "uses": "Set up {o} and wire {s} to use it.",
        "requires": "Provision {o} first because {s} requires it.",
        "stores": "Configure {o} so that {s} records are stored reliably.",
        "transmits": "Connect {s} to {o} and transmit the data stream.",
        "hosts": "Deploy {s} on {o} and verify the runtime health checks.",
        "monitors": "Enable {s} to monitor {o} and review the readings.",
        "notifies": "Route alerts from {s} through {o} to notify users.",
        "secures": "Harden {o} so that {s} stays secured end to end.",
        "visualizes": "Build dashboards where {s} visualizes {o}.",
        "analyzes": "Feed {o} into {s} and analyze the results.",
        "predicts": "Train {s} on {o} to predict upcoming behavior.",
    }

    def __init__(self, seed: int = 0) -> None:
        self.seed = int(seed)
        self.identity = f"offline-completion(seed={self.seed})"

    def complete(self, prompt: str, max_tokens: int) -> str:
        if INSTRUCTION_REQUEST_MARKER in prompt:
            text = self._instructions(prompt)
        elif FACT_REQUEST_MARKER in prompt:
            text = self._facts(prompt)
        else:
            return ""
        tokens = text.split()
        if len(tokens) > max_tokens:
            # Cut on a line boundary under the budget.
            kept: list[str] = []
            used = 0
            for line in text.splitlines():
                n = len(line.split())
                if used + n > max_tokens:
                    break
                kept.append(line)
                used += n
            text = "\n".join(kept)
        return text

    @staticmethod
    def _prompt_facts(prompt: str) -> list[tuple[str, str, str]]:
        facts: list[tuple[str, str, str]] = []
        inside = False
        for line in prompt.splitlines():
            line = line.strip()
            if line == _FACTS_HEADER:
                inside = True
                continue
            if line == _FACTS_FOOTER:
                break
            if inside and line.count("|") == 2:
                s, p, o = (part.strip() for part in line.split("|"))
                if s and p and o:
                    facts.append((s, p, o))
        return facts

    @staticmethod
    def _prompt_entities(prompt: str) -> list[str]:
        match = re.search(r"^User entities: (.*)$", prompt, re.MULTILINE)
        if not match:
            return []
        return [normalize_label(e) for e in match.group(1).rstrip(".").split(",") if e.strip()]

    @staticmethod
    def _prompt_limit(prompt: str) -> int:
        match = re.search(r"at most (\d+)", prompt)
        return int(match.group(1)) if match else 5

    def _facts(self, prompt: str) -> str:
        facts = self._prompt_facts(prompt)
        limit = self._prompt_limit(prompt)
        seeds = self._prompt_entities(prompt)
        for s, _, o in facts:
            for label in (s, o):
                if label not in seeds:
                    seeds.append(label)
        if not seeds:
            seeds = ["the system"]
        lines = []
        seen: set[tuple[str, str, str]] = {
            (s, p, o) for s, p, o in facts
        }
        i = 0
        for partner, relation in self.TECH_CATALOG:
            if len(lines) >= limit:
                break
            seed = seeds[i % len(seeds)]
            i += 1
            fact = (seed, relation, partner)
            if fact in seen:
                continue
            seen.add(fact)
            lines.append(f"{seed} | {relation} | {partner}")
        return "\n".join(lines)

    def _instructions(self, prompt: str) -> str:
        facts = self._prompt_facts(prompt)
        out = ["Follow the steps in order."]
        step = 1
        for s, p, o in facts:
            template = self._STEP_TEMPLATES.get(
                p, "Link {s} to {o} through the {p} relationship."
            )
            out.append(f"{step}. {template.format(s=s, p=p.replace('_', ' '), o=o)}")
            step += 1
        if step == 1:
            out.append("1. Clarify the requirements and identify the core entities.")
            step = 2
        out.append(f"{step}. Validate the end-to-end flow and monitor the rollout.")
        return "\n".join(out)


class FixtureCompletionProvider(CompletionProvider):
    """Replays canned responses keyed by the SHA-256 of the prompt text.

    Misses delegate to the fallback provider (the offline synthesizer by
    default) unless strict mode is on, in which case they raise.
    """

    deterministic = True

    def __init__(
        self,
        directory: str | Path,
        fallback: CompletionProvider | None = None,
        strict: bool = False,
    ) -> None:
        self.directory = Path(directory)
        self.strict = strict
        self.fallback = None if strict else (fallback or OfflineCompletionProvider())
        self.identity = f"fixtures({self.directory})"

    @staticmethod
    def prompt_key(prompt: str) -> str:
        return hashlib.sha256(prompt.encode("utf-8")).hexdigest()

    def fixture_path(self, prompt: str) -> Path:
        return self.directory / f"{self.prompt_key(prompt)}.txt"

    def record(self, prompt: str, text: str) -> Path:
        """Pin a response for this prompt; used by fixture-building scripts."""
        path = self.fixture_path(prompt)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        return path

    def complete(self, prompt: str, max_tokens: int) -> str:
        path = self.fixture_path(prompt)
        if path.is_file():
            return path.read_text(encoding="utf-8")
        if self.fallback is None:
            raise ProviderError(f"no fixture for prompt hash {self.prompt_key(prompt)}")
        return self.fallback.complete(prompt, max_tokens)


def prompt_token_count(text: str) -> int:
    """Whitespace token count; the unit the prompt budget is enforced in."""
    return len(text.split())


def build_enrichment_prompt(
    g: KnowledgeGraph,
    thread: UserKnowledgeThread,
    limit: int,
    max_prompt_tokens: int = EnrichmentConfig.max_prompt_tokens,
) -> str:
    """Render the fact-proposal request.

    The prompt names the four layers, lists current facts one per line
    between fixed header and footer markers, lists the user entities, and
    asks for at most ``limit`` additions in the same format. Fact lines are
    dropped from the tail if the whitespace-token budget would overflow.
    """
    if limit < 1:
        raise ValueError(f"limit must be at least 1, got {limit}")

    fact_lines = sorted(
        f"{g.entity(t.subject).label} | {t.predicate} | {g.entity(t.object).label}"
        for t in g.triples
    )
    user_entities = ", ".join(sorted(thread.entities)) if thread.entities else "(none)"
    head = [
        "You maintain a layered domain knowledge graph with four layers:",
        "business, system, data, technology.",
        _FACTS_HEADER,
    ]
    tail = [
        _FACTS_FOOTER,
        f"User entities: {user_entities}.",
        f"{FACT_REQUEST_MARKER}: reply with at most {limit} lines, each in the",
        "same pipe-delimited format as the known facts above. Favor additions",
        "that connect the user entities to concrete technologies and add",
        "technical specificity. Do not repeat known facts. No prose.",
    ]
    fixed_budget = prompt_token_count("\n".join(head + tail))
    kept: list[str] = []
    used = fixed_budget
    for line in fact_lines:
        n = prompt_token_count(line)
        if used + n > max_prompt_tokens:
            break
        kept.append(line)
        used += n
    return "\n".join(head + kept + tail)


def parse_and_filter(
    response: str,
    g: KnowledgeGraph,
    onto: Ontology,
    embedder: EmbeddingProvider,
    limit: int,
    config: EnrichmentConfig | None = None,
) -> EnrichmentResult:
    """Run response lines through the filter gauntlet.

    Lines without a pipe are treated as prose and skipped silently. Checks,
    in order: arity (malformed), exact duplicate against the graph and the
    batch, near-duplicate (same normalized predicate, both endpoint label
    cosines above the configured bar against one existing triple), domain
    fit (both endpoints' best cosine against graph entity labels below the
    floor), then the acceptance cap.
    """
    config = config or EnrichmentConfig()
    result = EnrichmentResult()

    label_to_id = {g.entity(eid).label: eid for eid in sorted(g.entities)}
    graph_labels = sorted(label_to_id)
    existing_keys = {t.key() for t in g.triples}
    existing_label_triples = [
        (g.entity(t.subject).label, t.predicate, g.entity(t.object).label)
        for t in g.triples
    ]

    pending_ids: dict[str, str] = {}
    accepted_keys: set[tuple[str, str, str]] = set()

    def entity_id(label: str) -> str:
        if label in label_to_id:
            return label_to_id[label]
        if label not in pending_ids:
            pending_ids[label] = f"llm:{label.replace(' ', '_')}"
        return pending_ids[label]

    def best_graph_similarity(label: str) -> float:
        if not graph_labels:
            return 0.0
        vec = embedder.embed(label)
        return max(cosine(vec, embedder.embed(other)) for other in graph_labels)

    for raw_line in (response or "").splitlines():
        line = raw_line.strip()
        if not line or "|" not in line:
            continue
        parts = [normalize_label(p) for p in line.split("|")]
        if len(parts) != 3 or not all(parts):
            result.rejected.append(RejectedLine(line, "malformed"))
            continue
        subject_label, verb_phrase, object_label = parts
        predicate, _ = normalize_relation(verb_phrase, onto, embedder)

        subject_id = entity_id(subject_label)
        object_id = entity_id(object_label)
        key = (subject_id, predicate, object_id)
        if key in existing_keys or key in accepted_keys:
            result.rejected.append(RejectedLine(line, "duplicate"))
            continue

        near = False
        for s_old, p_old, o_old in existing_label_triples:
            if p_old != predicate:
                continue
            if (
                cosine(embedder.embed(subject_label), embedder.embed(s_old))
                > config.near_duplicate_cosine
                and cosine(embedder.embed(object_label), embedder.embed(o_old))
                > config.near_duplicate_cosine
            ):
                near = True
                break
        if near:
            result.rejected.append(RejectedLine(line, "near-duplicate"))
            continue

        if (
            best_graph_similarity(subject_label) < config.off_domain_floor
            and best_graph_similarity(object_label) < config.off_domain_floor
        ):
            result.rejected.append(RejectedLine(line, "off-domain"))
            continue

        if len(result.accepted) >= limit:
            result.rejected.append(RejectedLine(line, "over-limit"))
            continue

        accepted_keys.add(key)
        result.accepted.append(
            Triple(subject=subject_id, predicate=predicate, object=object_id, provenance="llm")
        )

    known_new: set[str] = set()
    for triple in result.accepted:
        for eid in triple.endpoints():
            if eid in g.entities or eid in known_new:
                continue
            label = next(lbl for lbl, pid in pending_ids.items() if pid == eid)
            layer = classify_entity(label, onto, embedder)
            result.new_entities.append(
                Entity(id=eid, label=label, layer=layer, provenance="llm")
            )
            known_new.add(eid)
    return result


def enrich(
    g: KnowledgeGraph,
    thread: UserKnowledgeThread,
    provider: CompletionProvider,
    onto: Ontology,
    embedder: EmbeddingProvider,
    config: EnrichmentConfig | None = None,
) -> KnowledgeGraph:
    """Prompt, filter, and return the extended graph (input stays untouched).

    Provider failures raise; callers that prefer to continue with the
    unenriched graph catch :class:`~kgthreads.errors.ProviderError`.
    """
    graph, _ = enrich_with_result(g, thread, provider, onto, embedder, config)
    return graph


def enrich_with_result(
    g: KnowledgeGraph,
    thread: UserKnowledgeThread,
    provider: CompletionProvider,
    onto: Ontology,
    embedder: EmbeddingProvider,
    config: EnrichmentConfig | None = None,
) -> tuple[KnowledgeGraph, EnrichmentResult]:
    config = config or EnrichmentConfig()
    prompt = build_enrichment_prompt(
        g, thread, config.limit, max_prompt_tokens=config.max_prompt_tokens
    )
    response = provider.complete(prompt, config.max_completion_tokens)
    result = parse_and_filter(response, g, onto, embedder, config.limit, config)
    if not result.accepted:
        return g, result
    enriched = g.with_additions(entities=result.new_entities, triples=result.accepted)
    return enriched, result
