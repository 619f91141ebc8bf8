"""HTTP surface: /v1/embed, /v1/mlm/topk, /v1/health.

Bodies are validated by hand so the error contract stays exact: 400 for
malformed requests, 413 when a batch exceeds ``max_batch``, 503 while
models are not loaded, 404 for unknown routes.  Response vector/prediction
order always matches request text order.
"""

from __future__ import annotations

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .backends import MASK_PLACEHOLDER, MlmBackend, TextEncoderBackend
from .config import ServiceConfig

log = logging.getLogger("phem_sidecar")

__all__ = ["create_app", "ModelState"]


class ModelState:
    """Holds the two backends; either may be injected or lazily loaded."""

    def __init__(
        self,
        config: ServiceConfig,
        text_encoder: TextEncoderBackend | None = None,
        mlm: MlmBackend | None = None,
    ):
        self.config = config
        self.text_encoder = text_encoder
        self.mlm = mlm

    @property
    def ready(self) -> bool:
        return self.text_encoder is not None and self.mlm is not None

    def load(self) -> None:
        """Load any backend not injected; requires the models extra."""
        from .backends import ClipTextEncoder, MaskedLmBackend

        if self.text_encoder is None:
            log.info("loading text encoder %s", self.config.text_encoder_id)
            self.text_encoder = ClipTextEncoder(self.config.text_encoder_id, self.config.device)
        if self.mlm is None:
            log.info("loading masked LM %s", self.config.mlm_id)
            self.mlm = MaskedLmBackend(self.config.mlm_id, self.config.device)


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


async def _json_body(request: Request) -> dict | JSONResponse:
    try:
        body = await request.json()
    except Exception:
        return _error(400, "body must be a JSON object")
    if not isinstance(body, dict):
        return _error(400, "body must be a JSON object")
    return body


def _check_texts(body: dict, max_batch: int) -> list[str] | JSONResponse:
    texts = body.get("texts")
    if not isinstance(texts, list) or not texts:
        return _error(400, "'texts' must be a non-empty list of strings")
    if any(not isinstance(t, str) or not t for t in texts):
        return _error(400, "every text must be a non-empty string")
    if len(texts) > max_batch:
        return _error(413, f"batch of {len(texts)} exceeds max_batch={max_batch}")
    return texts


def create_app(
    config: ServiceConfig | None = None,
    text_encoder: TextEncoderBackend | None = None,
    mlm: MlmBackend | None = None,
    *,
    load_on_startup: bool = False,
) -> FastAPI:
    """Build the service; inject backends for tests, or let startup load them."""
    config = config or ServiceConfig.from_env()
    state = ModelState(config, text_encoder, mlm)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if load_on_startup and not state.ready:
            state.load()
        yield

    app = FastAPI(title="phem-sidecar", lifespan=lifespan)
    app.state.models = state

    @app.get("/v1/health")
    async def health():
        if not state.ready:
            return _error(503, "models are not loaded")
        return {
            "status": "ok",
            "models": {
                "text_encoder": state.text_encoder.model_id,
                "mlm": state.mlm.model_id,
            },
            "max_batch": config.max_batch,
        }

    @app.post("/v1/embed")
    async def embed(request: Request):
        if state.text_encoder is None:
            return _error(503, "text encoder is not loaded")
        body = await _json_body(request)
        if isinstance(body, JSONResponse):
            return body
        texts = _check_texts(body, config.max_batch)
        if isinstance(texts, JSONResponse):
            return texts
        normalize = body.get("normalize", False)
        if not isinstance(normalize, bool):
            return _error(400, "'normalize' must be a boolean")

        import numpy as np

        vectors = np.asarray(state.text_encoder.encode(texts), dtype=np.float32)
        if normalize:
            norms = np.linalg.norm(vectors.astype(np.float64), axis=1, keepdims=True)
            norms[norms == 0.0] = 1.0
            vectors = (vectors / norms).astype(np.float32)
        return {
            "model": state.text_encoder.model_id,
            "dim": int(vectors.shape[1]),
            "vectors": [[float(x) for x in row] for row in vectors],
        }

    @app.post("/v1/mlm/topk")
    async def mlm_topk(request: Request):
        if state.mlm is None:
            return _error(503, "masked LM is not loaded")
        body = await _json_body(request)
        if isinstance(body, JSONResponse):
            return body
        texts = _check_texts(body, config.max_batch)
        if isinstance(texts, JSONResponse):
            return texts
        k = body.get("k")
        if not isinstance(k, int) or isinstance(k, bool) or not (1 <= k <= 100):
            return _error(400, "'k' must be an integer in [1, 100]")
        for t in texts:
            count = t.count(MASK_PLACEHOLDER)
            if count != 1:
                return _error(400, f"text must contain exactly one '{MASK_PLACEHOLDER}', found {count}")

        predictions = state.mlm.topk(texts, k)
        for plist in predictions:
            scores = [p["score"] for p in plist]
            if any(b > a for a, b in zip(scores, scores[1:])):
                return _error(500, "backend returned non-descending scores")
        return {"model": state.mlm.model_id, "predictions": predictions}

    return app
