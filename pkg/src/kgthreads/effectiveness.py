"""Six-dimension instruction quality scoring with a weighted overall score.

Every dimension is a weighted blend of bounded subcomponents, so dimension
scores and the overall score always land in [0, 1] no matter the input
text. Frequency-style subcomponents saturate at a documented per-sentence
or per-token rate; the saturation constants live in this module and scores
are only comparable when computed with one dictionary version.

Sentence splitting uses terminal punctuation plus newlines (the same rule
the clause extractor uses). Term dictionaries are plain-text assets, one
term per line with "#" comments.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingProvider, cosine
from .embeddings import tokenize as _embed_tokens
from .extraction import _WORD_RE, extract_triples, split_sentences
from .graph import normalize_label
from .lexicons import LEXICON_VERSION, load_lexicon
from .ontology import DOMAIN_TAGS, Ontology

APPROACHES = ("ret_eval", "gnn", "rm")

# Overall blend (by dimension): actionability, coherence, tech specificity,
# domain specificity, understandability, user focus. These weights total
# 1.05 by design of the published blend; overall() caps the sum at 1.0 so
# the score stays in range even when every dimension is perfect.
OVERALL_WEIGHTS = {"A": 0.10, "C": 0.30, "TS": 0.20, "DS": 0.15, "U": 0.15, "UF": 0.15}
OVERALL_WEIGHT_TOTAL = 1.05

# Per-dimension subcomponent weights; each row must sum to 1.
DIMENSION_WEIGHTS = {
    "A": {"similarity": 0.40, "action_verbs": 0.25, "specificity": 0.20, "tools": 0.15},
    "C": {"sequential": 0.30, "causal": 0.25, "structure": 0.25, "flow": 0.20},
    "DS": {"term_frequency": 0.50, "centroid": 0.30, "generic_penalty": 0.20},
    "TS": {"tech_terms": 0.40, "tools": 0.30, "parameters": 0.20, "code_refs": 0.10},
    "U": {"structure": 0.30, "readability": 0.25, "step_clarity": 0.25, "load": 0.20},
    "UF": {"entities": 0.40, "intent_verbs": 0.30, "overlap": 0.20, "modal_echoes": 0.10},
}

# Saturation rates: a frequency subcomponent reaches 1.0 at this many hits
# per sentence (or this hit density per content token where noted).
SATURATION = {
    "action_verbs_per_sentence": 1.0,
    "tools_per_sentence": 0.5,
    "sequential_per_sentence": 1.0,
    "causal_per_sentence": 0.5,
    "parameters_per_sentence": 0.5,
    "code_refs_per_sentence": 0.25,
    "vague_per_sentence": 1.0,
    "concrete_per_sentence": 1.0,
    "domain_token_density": 0.2,
    "tech_token_density": 0.2,
    "generic_token_density": 0.2,
    "jargon_token_density": 0.3,
    "punctuation_depth": 3.0,
}

READABLE_MIN = 12  # tokens; triangular readability plateau
READABLE_MAX = 25

_STRUCTURED_LINE = re.compile(r"^\s*(\d+[.)]\s|[-*•]\s|#{1,6}\s)")
_NUMBERED_STEP = re.compile(r"(?:^|\n)\s*\d+[.)]\s")
_KEY_VALUE = re.compile(r"\b\w+\s*=\s*[^\s,;]+")
_NUMBER_WITH_UNIT = re.compile(
    r"\b\d+(?:\.\d+)?\s*(?:ms|s|sec|seconds?|min|minutes?|h|hours?|days?|"
    r"kb|mb|gb|tb|hz|khz|mhz|ghz|%|px|tokens?|items?|epochs?|dimensions?)\b",
    re.IGNORECASE,
)
_INLINE_CODE = re.compile(r"`[^`]+`")
_CALL_SHAPE = re.compile(r"\b\w+\([^()\n]*\)")
_PUNCT_DEPTH = re.compile(r"[,;:()]")


def _check_weight_tables() -> None:
    for name, row in DIMENSION_WEIGHTS.items():
        total = sum(row.values())
        if abs(total - 1.0) > 1e-9:
            raise AssertionError(f"dimension {name} weights sum to {total}")
    if abs(sum(OVERALL_WEIGHTS.values()) - OVERALL_WEIGHT_TOTAL) > 1e-9:
        raise AssertionError("overall weights drifted from the documented blend")


_check_weight_tables()


@dataclass(frozen=True)
class InstructionSet:
    text: str
    prompt: str
    approach: str = "ret_eval"

    def __post_init__(self) -> None:
        if self.approach not in APPROACHES:
            raise ValueError(f"approach must be one of {APPROACHES}, got {self.approach!r}")


@dataclass(frozen=True)
class DimensionScore:
    score: float
    subcomponents: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "score": round(self.score, 9),
            "subcomponents": {k: round(v, 9) for k, v in self.subcomponents.items()},
        }


@dataclass(frozen=True)
class EffectivenessReport:
    actionability: DimensionScore
    coherence: DimensionScore
    domain_specificity: DimensionScore
    tech_specificity: DimensionScore
    understandability: DimensionScore
    user_focus: DimensionScore
    overall_score: float
    lexicon_version: str = LEXICON_VERSION

    def dimension_scores(self) -> dict[str, float]:
        return {
            "A": self.actionability.score,
            "C": self.coherence.score,
            "DS": self.domain_specificity.score,
            "TS": self.tech_specificity.score,
            "U": self.understandability.score,
            "UF": self.user_focus.score,
        }

    def to_dict(self) -> dict:
        return {
            "A": self.actionability.to_dict(),
            "C": self.coherence.to_dict(),
            "DS": self.domain_specificity.to_dict(),
            "TS": self.tech_specificity.to_dict(),
            "U": self.understandability.to_dict(),
            "UF": self.user_focus.to_dict(),
            "E": round(self.overall_score, 9),
            "lexicon_version": self.lexicon_version,
        }

    def csv_row(self) -> dict:
        row = {k: round(v, 6) for k, v in self.dimension_scores().items()}
        row["E"] = round(self.overall_score, 6)
        return row


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, float(x)))


def _tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def _content_tokens(text: str) -> list[str]:
    stop = load_lexicon("stopwords")
    return [t for t in _tokens(text) if t not in stop]


def _count_term_hits(text: str, terms: frozenset[str]) -> int:
    """Occurrences of dictionary terms; multiword terms match on word bounds."""
    norm = " ".join(_tokens(text))
    hits = 0
    padded = f" {norm} "
    for term in terms:
        if " " in term:
            hits += padded.count(f" {term} ")
    single = {t for t in terms if " " not in t}
    for tok in norm.split():
        if tok in single:
            hits += 1
    return hits


def _per_sentence(hits: int, sentence_count: int, rate: float) -> float:
    if sentence_count < 1:
        return 0.0
    return _clamp01((hits / sentence_count) / rate)


def _density(hits: int, token_count: int, rate: float) -> float:
    if token_count < 1:
        return 0.0
    return _clamp01((hits / token_count) / rate)


def _structure_fraction(text: str) -> float:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        return 0.0
    structured = sum(1 for line in lines if _STRUCTURED_LINE.match(line))
    return structured / len(lines)


def score_actionability(ins: InstructionSet, embedder: EmbeddingProvider) -> DimensionScore:
    """Prompt alignment, action verb rate, specific wording, tool mentions."""
    text = ins.text
    sentences = split_sentences(text)
    n = len(sentences)
    action = load_lexicon("action_verbs")
    vague = load_lexicon("vague_terms")
    concrete = load_lexicon("concrete_terms")
    tools = load_lexicon("tools_platforms")

    if _embed_tokens(ins.prompt) and _embed_tokens(text):
        similarity = _clamp01(cosine(embedder.embed(ins.prompt), embedder.embed(text)))
    else:
        similarity = 0.0
    verbs = _per_sentence(
        _count_term_hits(text, action), n, SATURATION["action_verbs_per_sentence"]
    )
    vague_rate = _per_sentence(
        _count_term_hits(text, vague), n, SATURATION["vague_per_sentence"]
    )
    concrete_rate = _per_sentence(
        _count_term_hits(text, concrete), n, SATURATION["concrete_per_sentence"]
    )
    specificity = _clamp01(1.0 - vague_rate + 0.5 * concrete_rate)
    tool_rate = _per_sentence(
        _count_term_hits(text, tools), n, SATURATION["tools_per_sentence"]
    )

    w = DIMENSION_WEIGHTS["A"]
    parts = {
        "similarity": similarity,
        "action_verbs": verbs,
        "specificity": specificity,
        "tools": tool_rate,
    }
    score = sum(w[k] * parts[k] for k in w)
    return DimensionScore(score=score, subcomponents=parts)


def score_coherence(ins: InstructionSet, embedder: EmbeddingProvider) -> DimensionScore:
    """Ordering markers, causal links, structure, inter-sentence flow."""
    text = ins.text
    sentences = split_sentences(text)
    n = len(sentences)
    sequential_terms = load_lexicon("sequential_connectors")
    causal_terms = load_lexicon("causal_connectors")

    numbered = len(_NUMBERED_STEP.findall(text))
    sequential_hits = numbered + _count_term_hits(text, sequential_terms)
    sequential = _per_sentence(sequential_hits, n, SATURATION["sequential_per_sentence"])
    causal = _per_sentence(
        _count_term_hits(text, causal_terms), n, SATURATION["causal_per_sentence"]
    )
    structure = _structure_fraction(text)
    if n < 2:
        flow = 0.0  # no pairs to compare by convention
    else:
        embeddable = [i for i, s in enumerate(sentences) if _embed_tokens(s)]
        vecs = dict(
            zip(embeddable, embedder.embed_many([sentences[i] for i in embeddable]))
        ) if embeddable else {}
        sims = [
            float(vecs[i] @ vecs[i + 1])
            for i in range(n - 1)
            if i in vecs and i + 1 in vecs
        ]
        flow = _clamp01(float(np.mean(sims))) if sims else 0.0

    w = DIMENSION_WEIGHTS["C"]
    parts = {"sequential": sequential, "causal": causal, "structure": structure, "flow": flow}
    score = sum(w[k] * parts[k] for k in w)
    return DimensionScore(score=score, subcomponents=parts)


def score_domain_specificity(
    ins: InstructionSet,
    onto: Ontology,
    embedder: EmbeddingProvider,
    domain: str,
) -> DimensionScore:
    """Domain-term density, centroid similarity, generic-language penalty."""
    if domain not in DOMAIN_TAGS:
        raise ValueError(f"unknown domain {domain!r}; expected one of {DOMAIN_TAGS}")
    text = ins.text
    domain_terms = onto.domain_dictionaries[domain]
    generic = load_lexicon("generic_terms")
    content = _content_tokens(text)

    term_frequency = _density(
        _count_term_hits(text, domain_terms), len(content), SATURATION["domain_token_density"]
    )
    if _embed_tokens(text) and domain_terms:
        centroid = np.mean(embedder.embed_many(sorted(domain_terms)), axis=0)
        norm = float(np.linalg.norm(centroid))
        if norm > 0:
            centroid = centroid / norm
        centroid_sim = _clamp01(cosine(embedder.embed(text), centroid))
    else:
        centroid_sim = 0.0
    generic_penalty = 1.0 - _density(
        _count_term_hits(text, generic), len(content), SATURATION["generic_token_density"]
    )

    w = DIMENSION_WEIGHTS["DS"]
    parts = {
        "term_frequency": term_frequency,
        "centroid": centroid_sim,
        "generic_penalty": generic_penalty,
    }
    score = sum(w[k] * parts[k] for k in w)
    return DimensionScore(score=score, subcomponents=parts)


def score_tech_specificity(ins: InstructionSet) -> DimensionScore:
    """Technical vocabulary, tool names, parameter patterns, code references."""
    text = ins.text
    sentences = split_sentences(text)
    n = len(sentences)
    tech = load_lexicon("tech_terms")
    tools = load_lexicon("tools_platforms")
    content = _content_tokens(text)

    tech_terms = _density(
        _count_term_hits(text, tech), len(content), SATURATION["tech_token_density"]
    )
    tool_rate = _per_sentence(
        _count_term_hits(text, tools), n, SATURATION["tools_per_sentence"]
    )
    param_hits = len(_KEY_VALUE.findall(text)) + len(_NUMBER_WITH_UNIT.findall(text))
    parameters = _per_sentence(param_hits, n, SATURATION["parameters_per_sentence"])
    code_hits = len(_INLINE_CODE.findall(text)) + len(_CALL_SHAPE.findall(text))
    code_refs = _per_sentence(code_hits, n, SATURATION["code_refs_per_sentence"])

    w = DIMENSION_WEIGHTS["TS"]
    parts = {
        "tech_terms": tech_terms,
        "tools": tool_rate,
        "parameters": parameters,
        "code_refs": code_refs,
    }
    score = sum(w[k] * parts[k] for k in w)
    return DimensionScore(score=score, subcomponents=parts)


def _triangular_readability(length: int) -> float:
    if length < 1:
        return 0.0
    if length < READABLE_MIN:
        return length / READABLE_MIN
    if length <= READABLE_MAX:
        return 1.0
    return max(0.0, 1.0 - (length - READABLE_MAX) / READABLE_MAX)


def score_understandability(ins: InstructionSet) -> DimensionScore:
    """Structure, sentence-length fit, per-step clarity, inverted load."""
    text = ins.text
    sentences = split_sentences(text)
    n = len(sentences)
    action = load_lexicon("action_verbs")
    concrete = load_lexicon("concrete_terms") | load_lexicon("tech_terms") | load_lexicon(
        "tools_platforms"
    )
    tech = load_lexicon("tech_terms")
    content = _content_tokens(text)

    structure = _structure_fraction(text)
    if n:
        readability = float(
            np.mean([_triangular_readability(len(_tokens(s))) for s in sentences])
        )
        clear = sum(
            1
            for s in sentences
            if _count_term_hits(s, action) > 0 and _count_term_hits(s, concrete) > 0
        )
        step_clarity = clear / n
        depth = float(np.mean([len(_PUNCT_DEPTH.findall(s)) for s in sentences]))
    else:
        readability = 0.0
        step_clarity = 0.0
        depth = 0.0
    jargon = _density(
        _count_term_hits(text, tech), len(content), SATURATION["jargon_token_density"]
    )
    load = 0.5 * jargon + 0.5 * _clamp01(depth / SATURATION["punctuation_depth"])

    w = DIMENSION_WEIGHTS["U"]
    parts = {
        "structure": structure,
        "readability": readability,
        "step_clarity": step_clarity,
        "load": 1.0 - load,
    }
    score = sum(w[k] * parts[k] for k in w)
    return DimensionScore(score=score, subcomponents=parts)


def score_user_focus(ins: InstructionSet) -> DimensionScore:
    """How much of the prompt's substance the instructions carry forward."""
    modal_terms = load_lexicon("modal_verbs")
    action = load_lexicon("action_verbs")
    stop = load_lexicon("stopwords")

    instr_tokens = set(_tokens(ins.text))
    prompt_content = [t for t in _tokens(ins.prompt) if t not in stop]

    _, prompt_chunks = extract_triples(ins.prompt)
    chunks = [c for c in dict.fromkeys(prompt_chunks) if c]
    if chunks:
        covered = sum(
            1 for c in chunks if all(tok in instr_tokens for tok in c.split())
        )
        entity_coverage = covered / len(chunks)
    else:
        entity_coverage = 1.0  # nothing demanded, nothing missed

    prompt_intents = {t for t in _tokens(ins.prompt) if t in action}
    if prompt_intents:
        intent_verbs = sum(1 for v in prompt_intents if v in instr_tokens) / len(
            prompt_intents
        )
    else:
        intent_verbs = 1.0

    if prompt_content:
        overlap = sum(1 for t in set(prompt_content) if t in instr_tokens) / len(
            set(prompt_content)
        )
    else:
        overlap = 1.0

    modal_clauses = []
    for sentence in split_sentences(ins.prompt):
        tokens = _tokens(sentence)
        if any(t in modal_terms for t in tokens):
            clause_content = [t for t in tokens if t not in stop and t not in modal_terms]
            if clause_content:
                modal_clauses.append(clause_content)
    if modal_clauses:
        echoed = sum(
            1
            for clause in modal_clauses
            if sum(1 for t in clause if t in instr_tokens) >= math.ceil(len(clause) / 2)
        )
        modal_echoes = echoed / len(modal_clauses)
    else:
        modal_echoes = 1.0

    w = DIMENSION_WEIGHTS["UF"]
    parts = {
        "entities": entity_coverage,
        "intent_verbs": intent_verbs,
        "overlap": overlap,
        "modal_echoes": modal_echoes,
    }
    score = sum(w[k] * parts[k] for k in w)
    return DimensionScore(score=score, subcomponents=parts)


def overall(a: float, c: float, ts: float, ds: float, u: float, uf: float) -> float:
    """The fixed weighted blend of the six dimension scores, capped at 1."""
    values = {"A": a, "C": c, "TS": ts, "DS": ds, "U": u, "UF": uf}
    for name, value in values.items():
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"dimension {name} = {value} outside [0, 1]")
    return min(1.0, sum(OVERALL_WEIGHTS[k] * values[k] for k in OVERALL_WEIGHTS))


def score_all(
    ins: InstructionSet,
    onto: Ontology,
    embedder: EmbeddingProvider,
    domain: str,
) -> EffectivenessReport:
    """All six dimensions plus the overall score in one report."""
    if not ins.text.strip():
        raise ValueError("cannot score empty instruction text")
    a = score_actionability(ins, embedder)
    c = score_coherence(ins, embedder)
    ds = score_domain_specificity(ins, onto, embedder, domain)
    ts = score_tech_specificity(ins)
    u = score_understandability(ins)
    uf = score_user_focus(ins)
    e = overall(a.score, c.score, ts.score, ds.score, u.score, uf.score)
    return EffectivenessReport(
        actionability=a,
        coherence=c,
        domain_specificity=ds,
        tech_specificity=ts,
        understandability=u,
        user_focus=uf,
        overall_score=e,
    )
