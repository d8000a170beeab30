"""Loading of the versioned plain-text term lists shipped with the package.

Asset format: one term per line, ``#`` starts a comment. Scores produced from
these lists are only comparable under one asset version; the version string
is recorded in reports.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path

LEXICON_VERSION = "kgthreads-lexicons-1"

_NAMES = (
    "stopwords",
    "verbs",
    "aux_verbs",
    "action_verbs",
    "vague_terms",
    "concrete_terms",
    "generic_terms",
    "tech_terms",
    "tools_platforms",
    "sequential_connectors",
    "causal_connectors",
    "modal_verbs",
)


def parse_terms(text: str) -> tuple[str, ...]:
    terms = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            terms.append(" ".join(line.split()))
    return tuple(terms)


@lru_cache(maxsize=None)
def load_lexicon(name: str, path: str | None = None) -> frozenset[str]:
    """Load a packaged lexicon by name, or any file by explicit path."""
    if path is not None:
        return frozenset(parse_terms(Path(path).read_text(encoding="utf-8")))
    if name not in _NAMES:
        raise KeyError(f"unknown lexicon {name!r}; available: {_NAMES}")
    text = resources.files("kgthreads.data").joinpath(f"lexicons/{name}.txt").read_text("utf-8")
    return frozenset(parse_terms(text))


def stopwords() -> frozenset[str]:
    return load_lexicon("stopwords")
