"""Sentence-embedding HTTP sidecar for the retrieval pipeline."""

from embed_sidecar.models import (
    DEFAULT_MODEL_SPEC,
    HashProjectionModel,
    SentenceTransformerModel,
    load_model,
)
from embed_sidecar.service import create_app

__version__ = "0.1.0"
