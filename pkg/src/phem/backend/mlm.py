"""Masked-language-model providers for keyword probing.

The probe query carries a literal ``[mask]`` placeholder; a remote service
substitutes its model's actual mask token.  ``StaticMlmProvider`` replays
canned predictions from memory or a JSON file so probing can be done once
and replayed offline.
"""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import Callable, Mapping, Sequence

from ..prompting import MlmPrediction
from .providers import ProviderUnavailableError, _requests_transport, post_with_retries

__all__ = ["MlmProvider", "StaticMlmProvider", "RemoteMlmProvider"]


class MlmProvider:
    """Base interface: top-k fill-in predictions per query, in query order."""

    model_name: str = "unknown"

    def topk(self, queries: Sequence[str], k: int) -> list[list[MlmPrediction]]:
        raise NotImplementedError


class StaticMlmProvider(MlmProvider):
    """Canned predictions keyed by exact query text."""

    def __init__(self, predictions: Mapping[str, Sequence[tuple]], model_name: str = "static-mlm"):
        self._by_query = {
            q: [MlmPrediction(token=str(p[0]), score=float(p[1]), is_subword=bool(p[2]) if len(p) > 2 else False) for p in preds]
            for q, preds in predictions.items()
        }
        self.model_name = model_name

    @classmethod
    def from_json(cls, path: str | Path) -> "StaticMlmProvider":
        """Load ``{query: [[token, score, is_subword?], ...], ...}`` from a JSON file."""
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(data, model_name=f"canned:{Path(path).stem}")

    def topk(self, queries: Sequence[str], k: int) -> list[list[MlmPrediction]]:
        if k < 1:
            raise ValueError("k must be positive")
        out = []
        for q in queries:
            preds = self._by_query.get(q)
            if preds is None:
                raise ProviderUnavailableError(f"no canned predictions for query {q!r}")
            out.append(preds[:k])
        return out


class RemoteMlmProvider(MlmProvider):
    """HTTP client for the fill-mask service; same retry policy as embeddings."""

    def __init__(
        self,
        endpoint: str,
        *,
        model_name: str | None = None,
        max_batch: int = 64,
        timeout: float = 60.0,
        max_attempts: int = 3,
        backoff_base: float = 0.5,
        backoff_factor: float = 2.0,
        transport: Callable[[str, dict, float], tuple[int, dict | None]] | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if max_batch < 1:
            raise ValueError("max_batch must be positive")
        self.endpoint = endpoint.rstrip("/")
        self.model_name = model_name or "remote-mlm"
        self.max_batch = max_batch
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self._transport = transport or _requests_transport
        self._sleep = sleep

    @property
    def topk_url(self) -> str:
        return f"{self.endpoint}/v1/mlm/topk"

    def topk(self, queries: Sequence[str], k: int) -> list[list[MlmPrediction]]:
        if k < 1:
            raise ValueError("k must be positive")
        out: list[list[MlmPrediction]] = []
        for i in range(0, len(queries), self.max_batch):
            chunk = list(queries[i : i + self.max_batch])
            body = post_with_retries(
                self._transport,
                self.topk_url,
                {"texts": chunk, "k": k},
                timeout=self.timeout,
                max_attempts=self.max_attempts,
                backoff_base=self.backoff_base,
                backoff_factor=self.backoff_factor,
                sleep=self._sleep,
            )
            preds = body.get("predictions")
            if not isinstance(preds, list) or len(preds) != len(chunk):
                raise ProviderUnavailableError(
                    f"service returned {len(preds) if isinstance(preds, list) else 'no'} "
                    f"prediction lists for {len(chunk)} queries"
                )
            model = body.get("model")
            if isinstance(model, str) and model:
                self.model_name = model
            for plist in preds:
                out.append(
                    [
                        MlmPrediction(
                            token=str(p["token"]),
                            score=float(p["score"]),
                            is_subword=bool(p.get("is_subword", False)),
                        )
                        for p in plist
                    ]
                )
        return out
