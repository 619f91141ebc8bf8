"""Service configuration with environment-variable overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass

DEFAULT_TEXT_ENCODER = "openai/clip-vit-base-patch32"
DEFAULT_MLM = "bert-large-cased"

__all__ = ["ServiceConfig", "DEFAULT_TEXT_ENCODER", "DEFAULT_MLM"]


@dataclass(frozen=True)
class ServiceConfig:
    """Checkpoint ids, device, batching, and port for one deployment."""

    text_encoder_id: str = DEFAULT_TEXT_ENCODER
    mlm_id: str = DEFAULT_MLM
    device: str = "cpu"
    max_batch: int = 64
    port: int = 8011
    host: str = "127.0.0.1"

    def __post_init__(self) -> None:
        if self.max_batch < 1:
            raise ValueError("max_batch must be at least 1")

    @classmethod
    def from_env(cls, **overrides) -> "ServiceConfig":
        env = {
            "text_encoder_id": os.environ.get("PHEM_SIDECAR_TEXT_ENCODER"),
            "mlm_id": os.environ.get("PHEM_SIDECAR_MLM"),
            "device": os.environ.get("PHEM_SIDECAR_DEVICE"),
            "max_batch": _int_env("PHEM_SIDECAR_MAX_BATCH"),
            "port": _int_env("PHEM_SIDECAR_PORT"),
            "host": os.environ.get("PHEM_SIDECAR_HOST"),
        }
        merged = {k: v for k, v in env.items() if v is not None}
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**merged)


def _int_env(name: str) -> int | None:
    raw = os.environ.get(name)
    return int(raw) if raw is not None else None
