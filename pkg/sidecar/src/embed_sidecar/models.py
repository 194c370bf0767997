"""Embedding model providers.

Selected by the EMBED_MODEL environment variable:

  st:<checkpoint>   a sentence-transformers checkpoint (e.g.
                    st:sentence-transformers/all-MiniLM-L6-v2 for a
                    BERT-based model, st:sentence-transformers/
                    all-distilroberta-v1 for a RoBERTa-based one)
  hash:<dim>        offline deterministic token-hash projections; no
                    downloads, purely lexical similarity

Every provider is deterministic for a fixed model version: the same text
always yields the same vector. Vectors are returned unnormalized; cosine
similarity is scale-invariant, so normalization is the consumer's call.
"""

from __future__ import annotations

import hashlib
import re
from typing import Protocol, Sequence

import numpy as np

DEFAULT_MODEL_SPEC = "hash:384"

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class EmbeddingModel(Protocol):
    name: str
    dim: int

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


class HashProjectionModel:
    """Sum of per-token pseudo-random vectors, seeded from token digests."""

    def __init__(self, dim: int = 384):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self.name = f"hash-projection-{dim}"
        self._cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(
                token.encode("utf-8"), digest_size=8, key=b"embed-sidecar"
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "big"))
            vec = rng.standard_normal(self.dim)
            self._cache[token] = vec
        return vec

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for token in _TOKEN_RE.findall(text.lower()):
                out[row] += self._token_vector(token)
        return out


class SentenceTransformerModel:
    """Wraps a pretrained sentence-transformers checkpoint in eval mode."""

    def __init__(self, checkpoint: str):
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(checkpoint)
        self._model.eval()
        self.name = checkpoint
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(
            self._model.encode(
                list(texts), convert_to_numpy=True, show_progress_bar=False
            ),
            dtype=np.float64,
        )


def load_model(spec: str) -> EmbeddingModel:
    """Instantiate a provider from an EMBED_MODEL spec string."""
    if spec.startswith("hash:"):
        return HashProjectionModel(dim=int(spec[len("hash:"):]))
    if spec == "hash":
        return HashProjectionModel()
    if spec.startswith("st:"):
        return SentenceTransformerModel(spec[len("st:"):])
    raise ValueError(
        f"unknown model spec {spec!r}; expected 'hash:<dim>' or 'st:<checkpoint>'"
    )
