"""Embedding and sentiment companion service.

Serves deterministic 768-dimensional text embeddings and sentiment
simplex triples over HTTP, and exports the same values as offline
fixture files so downstream pipelines can run with no service at all.
"""

from .app import create_app
from .export import export_fixtures
from .model import EMBED_DIM, MAX_BATCH, MODEL_TAG, EmbeddingModel, load_model
from .textnorm import canonical_text, text_key

__all__ = [
    "EMBED_DIM",
    "MAX_BATCH",
    "MODEL_TAG",
    "EmbeddingModel",
    "canonical_text",
    "create_app",
    "export_fixtures",
    "load_model",
    "text_key",
]
