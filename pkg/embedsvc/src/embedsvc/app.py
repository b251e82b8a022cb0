"""HTTP surface: /embed, /sentiment, /healthz.

Handlers are stateless; the one model instance is read-only after
startup, so concurrent requests are safe without locking. Batches are
capped at MAX_BATCH texts (HTTP 400 beyond that) and a server whose
model failed to load answers 503 rather than serving garbage.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .model import MAX_BATCH, EmbeddingModel, load_model


class TextBatch(BaseModel):
    texts: list[str]


def create_app(model: EmbeddingModel | None = None, load: bool = True) -> FastAPI:
    """Build the service app; ``load=False`` simulates a failed model load."""
    app = FastAPI(title="embedsvc", version="0.1.0")
    app.state.model = model if model is not None else (load_model() if load else None)

    def _model() -> EmbeddingModel:
        current = app.state.model
        if current is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        return current

    def _check_batch(batch: TextBatch) -> list[str]:
        if len(batch.texts) > MAX_BATCH:
            raise HTTPException(
                status_code=400,
                detail=f"batch of {len(batch.texts)} texts exceeds limit of {MAX_BATCH}",
            )
        return batch.texts

    @app.post("/embed")
    def embed(batch: TextBatch):
        model = _model()
        vectors = model.embed_batch(_check_batch(batch))
        return {"model_tag": model.model_tag, "vectors": vectors.tolist()}

    @app.post("/sentiment")
    def sentiment(batch: TextBatch):
        model = _model()
        triples = model.sentiment_batch(_check_batch(batch))
        return {"model_tag": model.model_tag, "triples": triples.tolist()}

    @app.get("/healthz")
    def healthz():
        current = app.state.model
        if current is None:
            return JSONResponse(
                status_code=503, content={"status": "unloaded", "model_tag": None}
            )
        return {"status": "ok", "model_tag": current.model_tag}

    return app
