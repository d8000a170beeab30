"""Build the user knowledge thread from raw prompt text.

External NER and constituency parsing are replaced by a deterministic rule
grammar: sentences split on terminal punctuation, verb groups are detected
from a curated verb lexicon plus -s/-es/-ed/-ing morphology, and noun chunks
are maximal runs of non-stopword, non-verb tokens. The contract (clause
candidates normalized to ontology relations) is what downstream stages rely
on; a parser service can replace :func:`extract_triples` behind the same
signature.

Of note: only entities textually present in the prompt (plus explicit
"features:" terms) are captured. Entities that a human reader would infer
from context but that never appear in the text are out of reach of the rule
grammar and must enter through graph pruning or enrichment instead.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .embeddings import EmbeddingProvider, cosine
from .graph import Triple, normalize_label
from .lexicons import load_lexicon
from .ontology import FALLBACK_RELATION, Ontology

# Relation normalization falls back to the generic label below this similarity.
RELATION_SIMILARITY_FLOOR = 0.3

_SENTENCE_SPLIT = re.compile(r"[.!?]+(?:\s+|$)|\n+")
_WORD_RE = re.compile(r"[0-9a-z_\-']+")
_TOKEN_RE = re.compile(r"[0-9a-z_\-']+|,")  # commas kept: they coordinate clauses
_FEATURE_LINE = re.compile(r"^\s*features\s*:\s*(.+)$", re.IGNORECASE)

_COORDINATORS = {"and", "or", ","}
_DETERMINERS = {
    "a", "an", "the", "this", "these", "those", "each", "every",
    "any", "some", "its", "their", "your", "our", "my", "one",
}


@dataclass(frozen=True)
class ClauseCandidate:
    subject: str
    verb_phrase: str
    object: str


@dataclass
class UserKnowledgeThread:
    """Ordered user triples plus the label sets feeding relevance scoring."""

    triples: list[Triple] = field(default_factory=list)
    entities: set[str] = field(default_factory=set)
    context_terms: set[str] = field(default_factory=set)

    def items(self) -> list[str]:
        """Entity labels and verbalized triples, the units relevance compares against."""
        out = sorted(e for e in self.entities if e.strip())
        out.extend(f"{t.subject} {t.predicate} {t.object}" for t in self.triples)
        return out

    def is_empty(self) -> bool:
        return not self.entities and not self.triples

    def to_dict(self) -> dict:
        return {
            "triples": [[t.subject, t.predicate, t.object] for t in self.triples],
            "entities": sorted(self.entities),
            "context_terms": sorted(self.context_terms),
        }


def _strip_morphology(token: str, verbs: frozenset[str]) -> str | None:
    """Map an inflected token onto a lexicon base form, or None."""
    if token in verbs:
        return token
    for suffix in ("ing", "ed", "es", "s"):
        if token.endswith(suffix) and len(token) > len(suffix) + 1:
            stem = token[: -len(suffix)]
            if stem in verbs:
                return stem
            if stem + "e" in verbs:  # "stores" -> "store", "used" -> "use"
                return stem + "e"
            if len(stem) >= 2 and stem[-1] == stem[-2] and stem[:-1] in verbs:
                return stem[:-1]  # doubled consonant: "logged" -> "log"
            if stem.endswith("i") and stem[:-1] + "y" in verbs:
                return stem[:-1] + "y"  # "notifies" -> "notify"
    return None


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_SPLIT.split(text) if s and s.strip()]


def split_feature_terms(text: str) -> tuple[str, set[str]]:
    """Strip "features: a, b, c" lines from the prompt; returns (body, terms)."""
    body_lines: list[str] = []
    terms: set[str] = set()
    for line in text.splitlines():
        match = _FEATURE_LINE.match(line)
        if match:
            for item in match.group(1).split(","):
                norm = normalize_label(item)
                if norm:
                    terms.add(norm)
        else:
            body_lines.append(line)
    return "\n".join(body_lines), terms


def extract_triples(text: str) -> tuple[list[ClauseCandidate], list[str]]:
    """Clause candidates plus all noun chunks, in textual order.

    Per sentence, tokens are classed as verb-group members (lexicon plus
    morphology, auxiliaries only alongside a main verb), stopwords, or chunk
    material. Each verb group yields at most one (chunk, verb, chunk)
    candidate. A coordinator directly before a verb group re-uses the
    previous clause's subject ("X monitors A and logs B" keeps X as subject).
    """
    verbs = load_lexicon("verbs")
    aux = load_lexicon("aux_verbs")
    stop = load_lexicon("stopwords")

    candidates: list[ClauseCandidate] = []
    chunks_in_order: list[str] = []

    for sentence in split_sentences(text):
        tokens = _TOKEN_RE.findall(sentence.lower())
        if not tokens:
            continue

        # Tag tokens, then fold runs into alternating chunk / verb-group units.
        tags: list[str] = []
        for tok in tokens:
            if tok == ",":
                tags.append("stop")
            elif _strip_morphology(tok, verbs) is not None:
                tags.append("verb")
            elif tok in aux:
                tags.append("aux")
            elif tok in stop:
                tags.append("stop")
            else:
                tags.append("word")
        # Gerunds modifying a following noun ("caching layer") stay chunk
        # material; they act as verbs only after an auxiliary or verb.
        for i, tag in enumerate(tags):
            if (
                tag == "verb"
                and tokens[i].endswith("ing")
                and i + 1 < len(tags)
                and tags[i + 1] == "word"
                and not (i > 0 and tags[i - 1] in ("aux", "verb"))
            ):
                tags[i] = "word"
        # Noun-verb homographs after a determiner are nominal: "a message
        # broker", "the process". "that" is excluded, it marks relative
        # clauses ("a box that reminds...") far more often than it determines.
        for i, tag in enumerate(tags):
            if tag == "verb" and i > 0 and tokens[i - 1] in _DETERMINERS:
                tags[i] = "word"
        # Auxiliaries attach to an adjacent main verb, otherwise act as stopwords.
        for i, tag in enumerate(tags):
            if tag != "aux":
                continue
            before = i > 0 and tags[i - 1] == "verb"
            after = i + 1 < len(tags) and tags[i + 1] in ("verb", "aux")
            if before or after:
                tags[i] = "verb"
        for i, tag in enumerate(tags):
            if tag != "aux":
                continue
            # A lone possessive reads as containment ("the box has a sensor");
            # other unresolved auxiliaries carry no clause content.
            tags[i] = "verb" if tokens[i] in ("has", "have", "had") else "stop"
        # An inflected form right after a plain verb is a noun object, not a
        # verb-group member ("sends alerts", "tracks changes"). Bare forms
        # stay verbal so idioms like "makes use of" survive intact.
        for i in range(1, len(tags)):
            if (
                tags[i] == "verb"
                and tags[i - 1] == "verb"
                and tokens[i] not in verbs
                and tokens[i - 1] not in aux
            ):
                tags[i] = "word"
        # An inflected form that trails the sentence's last chunk with no
        # object of its own is nominal: "tracks inventory levels".
        for i in range(1, len(tags)):
            if (
                tags[i] == "verb"
                and tags[i - 1] == "word"
                and tokens[i] not in verbs
                and "word" not in tags[i + 1 :]
            ):
                tags[i] = "word"

        units: list[tuple[str, str, int]] = []  # (kind, text, start-token index)
        i = 0
        while i < len(tokens):
            tag = tags[i]
            if tag == "stop":
                i += 1
                continue
            j = i
            while j < len(tokens) and tags[j] == tag:
                j += 1
            units.append((tag, " ".join(tokens[i:j]), i))
            i = j

        last_chunk: str | None = None
        prev_subject: str | None = None
        pending_verb: str | None = None
        pending_subject: str | None = None
        last_emitted: ClauseCandidate | None = None
        object_chain: set[str] = set()
        for kind, unit_text, start in units:
            preceding = tokens[start - 1] if start > 0 else None
            if kind == "word":
                chunk = normalize_label(unit_text)
                chunks_in_order.append(chunk)
                if pending_verb is not None:
                    if pending_subject is not None:
                        last_emitted = ClauseCandidate(
                            pending_subject, pending_verb, chunk
                        )
                        candidates.append(last_emitted)
                        object_chain = {chunk}
                        prev_subject = pending_subject
                    pending_verb = None
                    pending_subject = None
                elif (
                    last_emitted is not None
                    and preceding in _COORDINATORS
                    and last_chunk in object_chain
                ):
                    # Coordinated objects share the verb: "monitors
                    # temperature, humidity and pressure".
                    last_emitted = ClauseCandidate(
                        last_emitted.subject, last_emitted.verb_phrase, chunk
                    )
                    candidates.append(last_emitted)
                    object_chain.add(chunk)
                last_chunk = chunk
            else:  # verb group
                if preceding in _COORDINATORS and prev_subject is not None:
                    subject = prev_subject
                else:
                    subject = last_chunk
                pending_verb = unit_text
                pending_subject = subject

    return candidates, chunks_in_order


def _phrase_variants(verb_phrase: str) -> list[str]:
    """Comparison views of a verb phrase: surface, lemmatized, and combined.

    Stopwords are dropped whenever content tokens remain, so "keeps track
    of" competes on "keeps track" rather than on the preposition.
    """
    verbs = load_lexicon("verbs")
    stop = load_lexicon("stopwords")
    surface = normalize_label(verb_phrase).split()
    if not surface:
        return []
    lemmas = [_strip_morphology(tok, verbs) or tok for tok in surface]
    combined = list(dict.fromkeys(surface + lemmas))

    def content(tokens: list[str]) -> list[str]:
        kept = [t for t in tokens if t not in stop]
        return kept or tokens

    variants: list[str] = []
    for tokens in (content(surface), content(lemmas), content(combined)):
        text = " ".join(tokens)
        if text and text not in variants:
            variants.append(text)
    return variants


def normalize_relation(
    verb_phrase: str, onto: Ontology, embedder: EmbeddingProvider
) -> tuple[str, float]:
    """Canonical relation label for a verb phrase, by descriptor similarity.

    A descriptor's description is a comma-separated synonym phrase list; the
    similarity is the best cosine between any phrase variant and any synonym
    phrase. Returns (label, similarity); below the 0.3 floor the generic
    ``related_to`` label is used and the raw similarity is still reported.
    """
    if not onto.relation_descriptors:
        raise ValueError("ontology has no relation descriptors")
    variants = _phrase_variants(verb_phrase)
    if not variants:
        return FALLBACK_RELATION, 0.0
    variant_vecs = [embedder.embed(v) for v in variants]
    best_label, best_sim = FALLBACK_RELATION, -1.0
    for desc in onto.relation_descriptors:
        parts = [p.strip() for p in desc.description.split(",") if p.strip()]
        for part in parts or [desc.description]:
            part_vec = embedder.embed(part)
            for vec in variant_vecs:
                sim = cosine(vec, part_vec)
                if sim > best_sim:
                    best_label, best_sim = desc.label, sim
    if best_sim < RELATION_SIMILARITY_FLOOR:
        return FALLBACK_RELATION, best_sim
    return best_label, best_sim


def build_user_thread(
    text: str, onto: Ontology, embedder: EmbeddingProvider
) -> UserKnowledgeThread:
    """Extract, normalize, and assemble the user knowledge thread.

    Entities are the prompt's noun chunks extended with "features:" context
    terms; every triple endpoint is guaranteed to appear in the entity set.
    """
    body, context_terms = split_feature_terms(text or "")
    candidates, chunks = extract_triples(body)

    thread = UserKnowledgeThread()
    thread.context_terms = context_terms
    thread.entities = set(chunks) | set(context_terms)
    seen: set[tuple[str, str, str]] = set()
    for cand in candidates:
        label, _ = normalize_relation(cand.verb_phrase, onto, embedder)
        triple = Triple(
            subject=cand.subject, predicate=label, object=cand.object, provenance="user"
        )
        if triple.key() in seen:
            continue
        seen.add(triple.key())
        thread.triples.append(triple)
    return thread
