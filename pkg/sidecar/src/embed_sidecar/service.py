"""HTTP embedding service.

Wire contract (JSON over HTTP/1.1, UTF-8):

  POST /embed   {"texts": [...]}            1..256 texts, each <= 8192 chars
            ->  {"dim": d, "vectors": [[...], ...], "model": "..."}
  GET  /health  -> {"status": "ok", "model": "...", "dim": d}

Malformed or over-limit requests get 400 with a descriptive message; both
endpoints answer 503 until the model has loaded. One vector per text, in
request order, deterministic for a fixed model version.
"""

from __future__ import annotations

import contextlib
import logging
import os

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from embed_sidecar.models import DEFAULT_MODEL_SPEC, EmbeddingModel, load_model

log = logging.getLogger("embed_sidecar")

MAX_TEXTS = 256
MAX_TEXT_CHARS = 8192


class EmbedRequest(BaseModel):
    texts: list[str] = Field(min_length=1, max_length=MAX_TEXTS)


class EmbedResponse(BaseModel):
    dim: int
    vectors: list[list[float]]
    model: str


def create_app(model_spec: str | None = None, defer_load: bool = False) -> FastAPI:
    """Build the service; the model loads on startup unless defer_load."""
    spec = model_spec or os.environ.get("EMBED_MODEL", DEFAULT_MODEL_SPEC)

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        if not defer_load:
            log.info("loading embedding model %r", spec)
            app.state.model = load_model(spec)
            log.info("model ready: %s (dim %d)", app.state.model.name, app.state.model.dim)
        yield

    app = FastAPI(title="embed-sidecar", lifespan=lifespan)
    app.state.model = None

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        # the wire contract promises 400 for malformed or over-limit bodies
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def current_model() -> EmbeddingModel | None:
        return app.state.model

    @app.get("/health")
    async def health():
        model = current_model()
        if model is None:
            return JSONResponse(status_code=503, content={"status": "loading"})
        return {"status": "ok", "model": model.name, "dim": model.dim}

    @app.post("/embed", response_model=EmbedResponse)
    async def embed(request: EmbedRequest):
        model = current_model()
        if model is None:
            return JSONResponse(status_code=503, content={"detail": "model not loaded"})
        too_long = [i for i, t in enumerate(request.texts) if len(t) > MAX_TEXT_CHARS]
        if too_long:
            return JSONResponse(
                status_code=400,
                content={
                    "detail": f"texts over the {MAX_TEXT_CHARS}-character limit "
                              f"at indices {too_long[:10]}"
                },
            )
        vectors = model.encode(request.texts)
        return EmbedResponse(
            dim=model.dim, vectors=vectors.tolist(), model=model.name
        )

    return app
