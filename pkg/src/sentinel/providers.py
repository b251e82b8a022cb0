"""Embedding and sentiment providers.

Two modes deliver the same contract: a file provider backed by an offline
fixture JSONL, and a service provider talking to the companion HTTP
service. Both are deterministic per text, enforce the 768-dimension and
sentiment-simplex invariants on receipt, and refuse to mix model tags
within one experiment.

Fixture records are keyed by the content hash of the minimally
preprocessed text; the file provider recomputes keys from each record's
raw text at load time, so exporters only need to store text faithfully.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from .errors import (
    MissingEmbeddingError,
    ModelTagMismatchError,
    ProviderError,
    SimplexViolationError,
    TransportError,
)
from .textprep import preprocess_minimal

logger = logging.getLogger(__name__)

EMBEDDING_DIM = 768
SIMPLEX_TOL = 1e-6

#: Sentiment returned for empty text in file mode (documented convention).
NEUTRAL_SENTIMENT = (0.0, 1.0, 0.0)


@dataclass(frozen=True)
class Embedding:
    vector: np.ndarray
    model_tag: str

    def __post_init__(self):
        if self.vector.shape != (EMBEDDING_DIM,):
            raise ProviderError(
                f"embedding must have {EMBEDDING_DIM} values, got shape {self.vector.shape}"
            )
        if not np.all(np.isfinite(self.vector)):
            raise ProviderError("embedding contains non-finite values")


@dataclass(frozen=True)
class SentimentTriple:
    positive: float
    neutral: float
    negative: float

    def __post_init__(self):
        values = (self.positive, self.neutral, self.negative)
        if not all(0.0 <= v <= 1.0 for v in values):
            raise SimplexViolationError(f"sentiment scores outside [0,1]: {values}")
        if abs(sum(values) - 1.0) > SIMPLEX_TOL:
            raise SimplexViolationError(f"sentiment scores sum to {sum(values)}, not 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.positive, self.neutral, self.negative])


def content_hash(text: str) -> str:
    """Canonical fixture key: sha256 over the minimally preprocessed text."""
    return hashlib.sha256(preprocess_minimal(text).encode("utf-8")).hexdigest()


class FileProvider:
    """Offline provider backed by a fixture JSONL store.

    Each line: {hash, text, embedding: [768 floats], sentiment: [3 floats],
    model_tag}. Lookups hash the minimally preprocessed query text, so the
    same report resolves to one vector regardless of which split it is in.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._embeddings: dict[str, np.ndarray] = {}
        self._sentiments: dict[str, SentimentTriple] = {}
        self.model_tag: str | None = None
        try:
            lines = self.path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ProviderError(f"cannot read fixture file {self.path}: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                key = content_hash(record["text"])
                vector = np.asarray(record["embedding"], dtype=np.float64)
                sentiment = SentimentTriple(*(float(v) for v in record["sentiment"]))
                tag = str(record["model_tag"])
            except SimplexViolationError:
                raise
            except (KeyError, TypeError, ValueError) as exc:
                raise ProviderError(
                    f"malformed fixture record at {self.path}:{lineno}: {exc}"
                ) from exc
            if self.model_tag is None:
                self.model_tag = tag
            elif tag != self.model_tag:
                raise ModelTagMismatchError(
                    f"fixture mixes model tags {self.model_tag!r} and {tag!r}"
                )
            if record.get("hash") not in (None, key):
                logger.debug(
                    "fixture %s:%d stored hash differs from recomputed key; using recomputed",
                    self.path,
                    lineno,
                )
            self._embeddings[key] = Embedding(vector, tag).vector
            self._sentiments[key] = sentiment
        if self.model_tag is None:
            raise ProviderError(f"fixture file {self.path} holds no records")

    def __len__(self) -> int:
        return len(self._embeddings)

    def get_embedding(self, text: str) -> Embedding:
        key = content_hash(text)
        vector = self._embeddings.get(key)
        if vector is None:
            raise MissingEmbeddingError(key)
        return Embedding(vector=vector, model_tag=self.model_tag)

    def get_sentiment(self, text: str) -> SentimentTriple:
        if not text.strip():
            return SentimentTriple(*NEUTRAL_SENTIMENT)
        key = content_hash(text)
        triple = self._sentiments.get(key)
        if triple is None:
            raise MissingEmbeddingError(key)
        return triple


class ServiceProvider:
    """HTTP client for the companion embedding service.

    Raw text is sent as-is; the service owns its internal normalization.
    Responses are cached in-memory so repeated calls are identical and
    cheap. In-flight requests are bounded by a semaphore and retried
    idempotently on transport failures.
    """

    def __init__(
        self,
        base_url: str | None = None,
        max_in_flight: int = 8,
        retries: int = 2,
        timeout: float = 30.0,
        batch_size: int = 64,
    ):
        base_url = base_url or os.environ.get("SENTINEL_PROVIDER_URL")
        if not base_url:
            raise ProviderError(
                "service provider needs a base URL (argument or SENTINEL_PROVIDER_URL)"
            )
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self.timeout = timeout
        self.batch_size = min(batch_size, 64)
        self.model_tag: str | None = None
        self._gate = threading.Semaphore(max_in_flight)
        self._lock = threading.Lock()
        self._emb_cache: dict[str, np.ndarray] = {}
        self._sent_cache: dict[str, SentimentTriple] = {}

    def _post(self, endpoint: str, texts: list[str]) -> dict:
        last_error = None
        for attempt in range(self.retries + 1):
            try:
                with self._gate:
                    response = requests.post(
                        f"{self.base_url}{endpoint}",
                        json={"texts": texts},
                        timeout=self.timeout,
                    )
                response.raise_for_status()
                return response.json()
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(0.2 * (attempt + 1))
        raise TransportError(f"POST {endpoint} failed: {last_error}", self.retries)

    def _check_tag(self, tag: str) -> None:
        with self._lock:
            if self.model_tag is None:
                self.model_tag = tag
            elif tag != self.model_tag:
                raise ModelTagMismatchError(
                    f"service switched model tag from {self.model_tag!r} to {tag!r}"
                )

    def prefetch(self, texts: list[str]) -> None:
        """Batch-resolve embeddings and sentiments ahead of per-report lookups."""
        pending = [t for t in dict.fromkeys(texts) if t not in self._emb_cache]
        for start in range(0, len(pending), self.batch_size):
            chunk = pending[start : start + self.batch_size]
            payload = self._post("/embed", chunk)
            self._check_tag(str(payload["model_tag"]))
            vectors = payload["vectors"]
            if len(vectors) != len(chunk):
                raise ProviderError("service returned wrong number of vectors")
            for text, vec in zip(chunk, vectors):
                self._emb_cache[text] = Embedding(
                    np.asarray(vec, dtype=np.float64), self.model_tag
                ).vector
            payload = self._post("/sentiment", chunk)
            self._check_tag(str(payload["model_tag"]))
            for text, triple in zip(chunk, payload["triples"]):
                self._sent_cache[text] = SentimentTriple(*(float(v) for v in triple))

    def get_embedding(self, text: str) -> Embedding:
        if text not in self._emb_cache:
            self.prefetch([text])
        return Embedding(vector=self._emb_cache[text], model_tag=self.model_tag)

    def get_sentiment(self, text: str) -> SentimentTriple:
        if text not in self._sent_cache:
            self.prefetch([text])
        return self._sent_cache[text]


def get_embedding(provider, text: str) -> Embedding:
    """Functional alias; repeated calls return identical vectors per provider."""
    return provider.get_embedding(text)


def get_sentiment(provider, text: str) -> SentimentTriple:
    return provider.get_sentiment(text)
