"""Run configuration: layered JSON config with a stable content hash.

Precedence is flag > config file > built-in default.  The hash covers the
effective configuration (sorted-key canonical JSON) so identical configs
rerun to identical hashes and every emitted record is self-describing.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Mapping

__all__ = ["DEFAULTS", "load_config_file", "deep_merge", "config_hash", "resolve"]

DEFAULTS: dict[str, Any] = {
    "dataset_id": "",
    "provider": {
        "kind": "synthetic-hash",
        "endpoint": "http://127.0.0.1:8011",
        "store": "",
        "model": "",
        "dim": 64,
        "noise_sigma": 0.05,
        "seed": 0,
        "max_batch": 64,
        "in_flight": 4,
    },
    "mlm": {
        "kind": "canned",
        "endpoint": "http://127.0.0.1:8011",
        "canned": "",
        "max_batch": 64,
    },
    "prompt": {
        "k": 3,
        "mlm_fetch_k": 20,
        "keyword_cache": "",
        "include_subwords": False,
    },
    "clustering": {
        "restarts": 10,
        "max_iter": 300,
        "tol": 1e-4,
        "seed": 0,
    },
    "expansion": {
        "top_n": 50,
        "map_k": [10, 30, 50],
    },
    "grounding": {
        "threshold": 100,
        "phrase_level": False,
    },
    "cache_dir": "",
    "results": "results.jsonl",
}


def load_config_file(path: str | Path) -> dict[str, Any]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    return data


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    """Recursive dict merge; override wins, nested dicts merge key-wise."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def config_hash(cfg: Mapping[str, Any]) -> str:
    """Stable 16-hex-digit digest of the effective config."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def resolve(cfg: Mapping[str, Any], *path: str, flag: Any = None) -> Any:
    """Value for a dotted path with flag-over-config precedence."""
    if flag is not None:
        return flag
    node: Any = cfg
    for key in path:
        node = node[key]
    return node
