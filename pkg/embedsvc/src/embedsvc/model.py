"""Deterministic embedding and sentiment model.

The embedding is a signed feature-hashing projection of word and
character n-grams into a fixed 768-dimensional space, L2-normalized.
It needs no weight files or network access, is identical across
processes and platforms (keyed blake2b), and is a pure function of the
canonical text form — two texts that normalize identically embed
identically, which is what lets exported fixtures stand in for live
service calls.

Sentiment is a smoothed lexicon score with one-token negation scope,
normalized onto the probability simplex. Blank text maps to the exact
neutral triple (0, 1, 0).
"""

from __future__ import annotations

import re
from hashlib import blake2b

import numpy as np

from .textnorm import canonical_text

EMBED_DIM = 768
MAX_BATCH = 64
MODEL_TAG = "hashed-ngram-768-v1"

#: Hash key doubles as the model version salt: bumping it re-embeds everything.
_HASH_KEY = b"embedsvc/hashed-ngram/v1"

_WORD_RE = re.compile(r"\w+(?:['’\-]\w+)*", re.UNICODE)
_CHAR_NGRAM_SIZES = (3, 4)

_POSITIVE_WORDS = frozenset(
    """
    good great excellent calm peaceful peace smooth orderly free fair happy
    hopeful celebrate celebration win winning victory success successful
    transparent credible clean safe secure friendly welcoming praise
    love laudable impressive encouraged encouraging positive amani vizuri
    safi furaha shangwe ushindi
    """.split()
)

_NEGATIVE_WORDS = frozenset(
    """
    bad terrible awful violence violent clash clashes riot riots chaos
    fraud rigging rigged intimidation threat threats attack attacked fear
    angry anger corrupt corruption bribe bribery stolen theft steal broken
    failure failed delay delayed missing denied blocked injured killed
    dangerous unsafe crisis protest unrest vurugu wizi hatari ghasia hofu
    """.split()
)

_NEGATORS = frozenset("not no never neither nor without hardly hakuna sio si".split())


def _hash_feature(gram: str) -> tuple[int, float]:
    digest = blake2b(gram.encode("utf-8"), digest_size=8, key=_HASH_KEY).digest()
    index = int.from_bytes(digest[:4], "little") % EMBED_DIM
    sign = 1.0 if digest[4] & 1 else -1.0
    return index, sign


def _features(text: str):
    """Word unigrams/bigrams and character n-grams of the canonical form."""
    canon = canonical_text(text).lower()
    words = _WORD_RE.findall(canon)
    for word in words:
        yield "w:" + word
    for left, right in zip(words, words[1:]):
        yield "b:" + left + " " + right
    compact = " ".join(words)
    for size in _CHAR_NGRAM_SIZES:
        for start in range(len(compact) - size + 1):
            yield f"c{size}:" + compact[start : start + size]


class EmbeddingModel:
    """Stateless batch encoder; one instance safely serves concurrent requests."""

    model_tag = MODEL_TAG
    dim = EMBED_DIM

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), EMBED_DIM), dtype=np.float64)
        for row, text in enumerate(texts):
            vec = out[row]
            for gram in _features(text):
                index, sign = _hash_feature(gram)
                vec[index] += sign
            norm = float(np.linalg.norm(vec))
            if norm > 0.0:
                vec /= norm
        return out

    def sentiment_batch(self, texts: list[str]) -> np.ndarray:
        out = np.empty((len(texts), 3), dtype=np.float64)
        for row, text in enumerate(texts):
            out[row] = self._sentiment(text)
        return out

    @staticmethod
    def _sentiment(text: str) -> tuple[float, float, float]:
        words = _WORD_RE.findall(canonical_text(text).lower())
        if not words:
            return (0.0, 1.0, 0.0)
        positive = negative = 0
        for i, word in enumerate(words):
            negated = i > 0 and words[i - 1] in _NEGATORS
            if word in _POSITIVE_WORDS:
                negative += negated
                positive += not negated
            elif word in _NEGATIVE_WORDS:
                positive += negated
                negative += not negated
        plain = max(len(words) - positive - negative, 0)
        raw = np.array([1.0 + 2.0 * positive, 1.0 + 0.5 * plain, 1.0 + 2.0 * negative])
        scores = raw / raw.sum()
        return (float(scores[0]), float(scores[1]), float(scores[2]))


def load_model() -> EmbeddingModel:
    """Build the single model instance used for a server lifetime."""
    return EmbeddingModel()
