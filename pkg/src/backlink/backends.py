"""Embedding backends for the semantic re-ranking stage.

Two implementations of the same contract: a dependency-free offline
backend that sums seeded random projections of token hashes (deterministic
across processes, so repeated runs produce byte-identical output), and an
HTTP client for the sentence-embedding sidecar service.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
import requests

from backlink.corpus import tokenize

ENV_EMBED_URL = "BACKLINK_EMBED_URL"

HASH_BACKEND_DIM = 256
# Per-request limits of the sidecar wire protocol.
MAX_TEXTS_PER_REQUEST = 256
MAX_TEXT_CHARS = 8192


@dataclass(frozen=True)
class Embedding:
    values: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.values)


class EmbeddingBackendError(Exception):
    """Backend failed to produce embeddings; retrying may help."""

    def __init__(self, message: str, completed: int = 0):
        super().__init__(message)
        self.completed = completed  # texts already embedded before failure


class EmbeddingBackend(Protocol):
    name: str
    dim: int

    def embed(self, texts: Sequence[str]) -> list[Embedding]: ...


class HashEmbeddingBackend:
    """Offline backend: each token maps to a fixed pseudo-random unit-variance
    vector (seeded from a stable digest of the token), and a text embeds as
    the sum over its tokens. Purely lexical, but deterministic and
    dependency-free, which is what the offline test path needs."""

    def __init__(self, dim: int = HASH_BACKEND_DIM, seed: int = 0):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self.seed = seed
        self.name = f"hash-{dim}"
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(
                token.encode("utf-8"), digest_size=8, key=str(self.seed).encode()
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            vec = rng.standard_normal(self.dim)
            self._token_cache[token] = vec
        return vec

    def embed(self, texts: Sequence[str]) -> list[Embedding]:
        out = []
        for text in texts:
            acc = np.zeros(self.dim, dtype=np.float64)
            for token in tokenize(text):
                acc += self._token_vector(token)
            out.append(Embedding(values=acc))
        return out


class HttpEmbeddingBackend:
    """Client for the embedding sidecar (POST /embed, GET /health).

    Lazily fetches /health to learn the model name and dimension. Requests
    are chunked to the protocol's 256-text limit and individual texts
    truncated to its 8192-character limit.
    """

    def __init__(self, url: str, timeout: float = 30.0, session=None):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()
        self._name: str | None = None
        self._dim: int | None = None

    def _health(self) -> None:
        try:
            resp = self._session.get(f"{self.url}/health", timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
        except requests.RequestException as exc:
            raise EmbeddingBackendError(f"embedding service health check failed: {exc}") from exc
        self._name = f"http:{payload.get('model', 'unknown')}"
        self._dim = int(payload["dim"])

    @property
    def name(self) -> str:
        if self._name is None:
            self._health()
        return self._name

    @property
    def dim(self) -> int:
        if self._dim is None:
            self._health()
        return self._dim

    def embed(self, texts: Sequence[str]) -> list[Embedding]:
        out: list[Embedding] = []
        for start in range(0, len(texts), MAX_TEXTS_PER_REQUEST):
            chunk = [t[:MAX_TEXT_CHARS] for t in texts[start:start + MAX_TEXTS_PER_REQUEST]]
            try:
                resp = self._session.post(
                    f"{self.url}/embed", json={"texts": chunk}, timeout=self.timeout
                )
                resp.raise_for_status()
                payload = resp.json()
            except requests.RequestException as exc:
                raise EmbeddingBackendError(
                    f"embedding request failed: {exc}", completed=len(out)
                ) from exc
            vectors = payload.get("vectors")
            if not isinstance(vectors, list) or len(vectors) != len(chunk):
                raise EmbeddingBackendError(
                    f"embedding service returned {len(vectors or [])} vectors "
                    f"for {len(chunk)} texts", completed=len(out),
                )
            for vec in vectors:
                arr = np.asarray(vec, dtype=np.float64)
                if not np.all(np.isfinite(arr)):
                    raise EmbeddingBackendError(
                        "embedding service returned non-finite values",
                        completed=len(out),
                    )
                out.append(Embedding(values=arr))
        return out


def backend_from_spec(spec: str) -> EmbeddingBackend:
    """Build a backend from a CLI flag value: "hash" or "http:<url>".

    The BACKLINK_EMBED_URL environment variable overrides the URL portion
    of an http backend when set.
    """
    if spec == "hash":
        return HashEmbeddingBackend()
    if spec.startswith("http:"):
        url = os.environ.get(ENV_EMBED_URL) or spec[len("http:"):]
        if not url:
            raise ValueError("http backend needs a URL: --backend http:<url>")
        if "://" not in url:
            url = f"http://{url}"
        return HttpEmbeddingBackend(url)
    raise ValueError(f"unknown backend {spec!r}; expected 'hash' or 'http:<url>'")
