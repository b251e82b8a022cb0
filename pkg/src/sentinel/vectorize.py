"""TF-IDF vectorization with a configurable n-gram range.

Conventions are fixed so fixture numbers stay portable across machines:
smoothed idf(t) = ln((1 + N) / (1 + df(t))) + 1, and transformed vectors
are L2-normalized. Vocabulary indices are assigned in sorted term order,
so a fitted model is independent of corpus order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DataError
from .textprep import TokenSequence

def _tokens(doc) -> tuple[str, ...]:
    if isinstance(doc, TokenSequence):
        return doc.tokens
    return tuple(doc)


def _ngrams(tokens: tuple[str, ...], lo: int, hi: int):
    for n in range(lo, hi + 1):
        for i in range(len(tokens) - n + 1):
            yield " ".join(tokens[i : i + n])


@dataclass(frozen=True)
class SparseVector:
    """One transformed document: ascending indices with parallel values."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    @property
    def is_empty(self) -> bool:
        return self.indices.size == 0

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        dense[self.indices] = self.values
        return dense

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    ngram_range: tuple[int, int]
    doc_count: int

    def __post_init__(self):
        lo, hi = self.ngram_range
        if not (1 <= lo <= hi <= 2):
            raise DataError(f"ngram_range must satisfy 1 <= lo <= hi <= 2, got {self.ngram_range}")
        if len(self.idf) != len(self.vocabulary):
            raise DataError("idf length must equal vocabulary size")

    @property
    def dim(self) -> int:
        return len(self.vocabulary)

    def to_json(self) -> str:
        terms = [
            {"ngram": term, "index": idx, "idf": float(self.idf[idx])}
            for term, idx in sorted(self.vocabulary.items(), key=lambda kv: kv[1])
        ]
        payload = {
            "ngram_range": list(self.ngram_range),
            "doc_count": self.doc_count,
            "terms": terms,
        }
        return json.dumps(payload, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TfidfModel":
        try:
            payload = json.loads(text)
            vocabulary = {t["ngram"]: int(t["index"]) for t in payload["terms"]}
            idf = np.zeros(len(vocabulary))
            for t in payload["terms"]:
                idf[int(t["index"])] = float(t["idf"])
            return cls(
                vocabulary=vocabulary,
                idf=idf,
                ngram_range=tuple(payload["ngram_range"]),
                doc_count=int(payload["doc_count"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed TF-IDF model payload: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TfidfModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def fit_tfidf(
    corpus,
    ngram_range: tuple[int, int] = (1, 1),
    min_df: int = 1,
    max_df: float = 1.0,
) -> TfidfModel:
    """Fit vocabulary and idf weights over a non-empty token corpus.

    min_df / max_df prune rare and near-universal terms for memory control;
    the defaults keep every n-gram that appears at least once.
    """
    docs = [_tokens(d) for d in corpus]
    if not docs:
        raise DataError("cannot fit TF-IDF on an empty corpus")
    lo, hi = ngram_range

    df: dict[str, int] = {}
    for tokens in docs:
        for term in set(_ngrams(tokens, lo, hi)):
            df[term] = df.get(term, 0) + 1

    n_docs = len(docs)
    max_count = max_df * n_docs
    kept = sorted(t for t, c in df.items() if c >= min_df and c <= max_count)
    vocabulary = {term: i for i, term in enumerate(kept)}
    idf = np.array(
        [math.log((1 + n_docs) / (1 + df[term])) + 1.0 for term in kept]
    )
    return TfidfModel(vocabulary=vocabulary, idf=idf, ngram_range=(lo, hi), doc_count=n_docs)


def transform_tfidf(model: TfidfModel, doc) -> SparseVector:
    """tf * idf, L2-normalized; out-of-vocabulary n-grams are ignored.

    A document with no in-vocabulary terms yields an empty (zero) vector,
    which is legal and detectable via ``SparseVector.is_empty``.
    """
    lo, hi = model.ngram_range
    counts: dict[int, float] = {}
    for term in _ngrams(_tokens(doc), lo, hi):
        idx = model.vocabulary.get(term)
        if idx is not None:
            counts[idx] = counts.get(idx, 0.0) + 1.0
    if not counts:
        return SparseVector(np.array([], dtype=np.int64), np.array([]), model.dim)
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices]) * model.idf[indices]
    values /= np.linalg.norm(values)
    return SparseVector(indices=indices, values=values, dim=model.dim)


def transform_matrix(model: TfidfModel, corpus) -> sp.csr_matrix:
    """Transform a batch of documents into one CSR matrix, row order preserved."""
    indptr = [0]
    indices: list[np.ndarray] = []
    values: list[np.ndarray] = []
    for doc in corpus:
        vec = transform_tfidf(model, doc)
        indices.append(vec.indices)
        values.append(vec.values)
        indptr.append(indptr[-1] + vec.indices.size)
    data = np.concatenate(values) if values else np.array([])
    cols = np.concatenate(indices) if indices else np.array([], dtype=np.int64)
    return sp.csr_matrix((data, cols, np.array(indptr)), shape=(len(indptr) - 1, model.dim))
