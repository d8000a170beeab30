"""Text-embedding providers and the vector arithmetic shared by the pipeline.

Two providers are included: a fully deterministic offline provider (seeded
hash embeddings, suitable for tests and air-gapped runs) and a remote
provider speaking a small HTTP contract. Every similarity computation in
the package goes through :func:`cosine` so the clamping and normalization
rules live in one place.
"""

from __future__ import annotations

import hashlib
import re
import threading

import numpy as np

from .errors import DimensionMismatchError, ProviderError

# Stabilizer added to the denominator of every L2 normalization.
NORM_EPS = 1e-10

_TOKEN_RE = re.compile(r"[0-9a-z]+")


def normalize_text(text: str) -> str:
    """Lowercase and collapse whitespace; the identity used for caching."""
    return " ".join(text.lower().split())


def tokenize(text: str) -> list[str]:
    """Split on non-alphanumerics, lowercased. Deterministic and language-agnostic."""
    return _TOKEN_RE.findall(text.lower())


def l2_normalize(values: np.ndarray) -> np.ndarray:
    """Scale to unit L2 norm with an epsilon-stabilized denominator."""
    arr = np.asarray(values, dtype=np.float64)
    return arr / (np.linalg.norm(arr) + NORM_EPS)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1].

    Inputs are re-normalized defensively, so callers may pass raw vectors.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"cosine: shapes {a.shape} vs {b.shape}")
    value = float(np.dot(l2_normalize(a), l2_normalize(b)))
    return max(-1.0, min(1.0, value))


class EmbeddingProvider:
    """Base contract: same input text always yields the same vector.

    Subclasses set ``dimension`` and ``deterministic`` and implement
    ``_embed_normalized``. Providers are immutable and shareable; the memo
    cache only short-circuits recomputation and never changes values.
    """

    dimension: int
    deterministic: bool
    identity: str

    def __init__(self) -> None:
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def embed(self, text: str) -> np.ndarray:
        key = normalize_text(text)
        if not key:
            raise ProviderError("cannot embed empty text")
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        vector = self._embed_normalized(key)
        vector.setflags(write=False)
        with self._lock:
            self._cache[key] = vector
        return vector

    def embed_many(self, texts: list[str]) -> np.ndarray:
        """Stack of embeddings, one row per text."""
        return np.stack([self.embed(t) for t in texts])

    def _embed_normalized(self, text: str) -> np.ndarray:
        raise NotImplementedError


def _token_seed(seed: int, token: str) -> int:
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=seed.to_bytes(8, "little", signed=False)
    ).digest()
    return int.from_bytes(digest, "little")


class OfflineEmbedder(EmbeddingProvider):
    """Deterministic hash-based embeddings keyed by (seed, token).

    Each token gets a unit vector drawn from a seeded pseudo-random stream;
    a text embeds as the normalized mean of its token vectors. Identical
    tokens share vectors across texts, so texts with overlapping tokens
    score higher cosine than disjoint ones in expectation. The bag-of-tokens
    averaging makes embeddings invariant to token order.
    """

    deterministic = True

    def __init__(self, seed: int = 0, dimension: int = 384) -> None:
        if dimension < 8:
            raise ValueError(f"offline embedder dimension must be >= 8, got {dimension}")
        super().__init__()
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.dimension = int(dimension)
        self.identity = f"offline(seed={self.seed}, dim={self.dimension})"
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            rng = np.random.default_rng(_token_seed(self.seed, token))
            vec = l2_normalize(rng.standard_normal(self.dimension))
            self._token_cache[token] = vec
        return vec

    def _embed_normalized(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            raise ProviderError(f"text {text!r} has no embeddable tokens")
        mean = np.mean([self._token_vector(t) for t in tokens], axis=0)
        return l2_normalize(mean)


class RemoteEmbedder(EmbeddingProvider):
    """HTTP provider: POST /embed {"texts": [...]} -> {"vectors": [...], "dimension": n}.

    Single attempt per call; retries are the caller's concern.
    """

    deterministic = False

    def __init__(self, endpoint: str, dimension: int = 384, timeout: float = 10.0) -> None:
        super().__init__()
        self.endpoint = endpoint.rstrip("/")
        self.dimension = int(dimension)
        self.timeout = timeout
        self.identity = f"remote({self.endpoint}, dim={self.dimension})"

    def _embed_normalized(self, text: str) -> np.ndarray:
        import requests

        try:
            response = requests.post(
                f"{self.endpoint}/embed", json={"texts": [text]}, timeout=self.timeout
            )
            response.raise_for_status()
            payload = response.json()
        except Exception as exc:  # noqa: BLE001 - wrap transport errors uniformly
            raise ProviderError(f"embedding endpoint {self.endpoint} failed: {exc}") from exc
        vectors = payload.get("vectors")
        if not vectors or len(vectors) != 1:
            raise ProviderError(f"embedding endpoint returned {len(vectors or [])} vectors for 1 text")
        vector = np.asarray(vectors[0], dtype=np.float64)
        if vector.shape != (self.dimension,):
            raise DimensionMismatchError(
                f"endpoint returned dimension {vector.shape}, expected ({self.dimension},)"
            )
        return l2_normalize(vector)
