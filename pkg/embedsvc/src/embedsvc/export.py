"""Offline fixture export.

Reads a corpus JSONL (any records carrying a ``text`` field), runs every
distinct text through the same model the HTTP endpoints use, and writes
one fixture record per canonical text form:

    {"hash": ..., "text": ..., "embedding": [768 floats],
     "sentiment": [3 floats], "model_tag": ...}

Because the model is a pure function of the canonical form, a consumer
replaying these fixtures sees byte-for-byte the values a live server
would have returned for the same texts.
"""

from __future__ import annotations

import json
from pathlib import Path

from .model import MAX_BATCH, EmbeddingModel, load_model
from .textnorm import text_key


def export_fixtures(
    corpus_path: str | Path,
    out_path: str | Path,
    model: EmbeddingModel | None = None,
) -> int:
    """Write fixture records for every distinct text; return the record count."""
    corpus_path = Path(corpus_path)
    out_path = Path(out_path)
    if model is None:
        model = load_model()

    texts: dict[str, str] = {}
    for lineno, line in enumerate(corpus_path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            text = record["text"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"corpus record {corpus_path}:{lineno} has no text: {exc}") from exc
        if not isinstance(text, str):
            raise ValueError(f"corpus record {corpus_path}:{lineno} text is not a string")
        texts.setdefault(text_key(text), text)

    keys = list(texts)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as handle:
        for start in range(0, len(keys), MAX_BATCH):
            chunk = keys[start : start + MAX_BATCH]
            batch = [texts[key] for key in chunk]
            vectors = model.embed_batch(batch)
            triples = model.sentiment_batch(batch)
            for key, text, vector, triple in zip(chunk, batch, vectors, triples):
                row = {
                    "hash": key,
                    "text": text,
                    "embedding": vector.tolist(),
                    "sentiment": triple.tolist(),
                    "model_tag": model.model_tag,
                }
                handle.write(json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n")
    return len(keys)
