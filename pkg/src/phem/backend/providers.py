"""Embedding providers: a uniform text -> vector interface.

Four kinds exist behind one contract:

* ``SyntheticHashProvider`` — deterministic pseudo-random unit vectors keyed
  by text bytes (counter-based generator), for tests and dry runs.
* ``SyntheticBlobProvider`` — class centroids plus Gaussian noise, for
  pipeline tests with known structure.
* ``StoreProvider`` — lookups against a store file written earlier.
* ``RemoteProvider`` — HTTP client for the embedding service, with
  batching, bounded concurrency, and retry with exponential backoff.

Any pipeline result depends on a provider only through its text -> vector
mapping, so providers are interchangeable.
"""

from __future__ import annotations

import hashlib
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from ..core import DimensionMismatchError, EmbeddingVector, PhemError, l2_normalize
from .store import read_store

log = logging.getLogger(__name__)

__all__ = [
    "ProviderUnavailableError",
    "TextNotFoundError",
    "UnknownTextError",
    "TransportError",
    "EmbeddingProvider",
    "SyntheticHashProvider",
    "SyntheticBlobProvider",
    "StoreProvider",
    "RemoteProvider",
    "CachingProvider",
    "post_with_retries",
    "stack_vectors",
]


class ProviderUnavailableError(PhemError):
    """The provider could not serve the request (after retries, if remote)."""


class TextNotFoundError(PhemError):
    """A store-backed provider has no vector for the requested text."""


class UnknownTextError(PhemError):
    """A blob provider has no class assignment for the requested text."""


class TransportError(PhemError):
    """A network-level failure; retryable."""


def _check_texts(texts: Sequence[str]) -> None:
    if not texts:
        raise ValueError("texts must be non-empty")
    for t in texts:
        if not isinstance(t, str) or not t:
            raise ValueError(f"every text must be a non-empty string, got {t!r}")


class EmbeddingProvider:
    """Base interface: map texts to one EmbeddingVector each, in order."""

    model_name: str = "unknown"
    dim: int | None = None

    def embed_batch(self, texts: Sequence[str], normalize: bool = False) -> list[EmbeddingVector]:
        raise NotImplementedError

    def _wrap(self, arr: np.ndarray, normalize: bool) -> EmbeddingVector:
        if normalize:
            return l2_normalize(arr)
        return EmbeddingVector(np.asarray(arr, dtype=np.float32), normalized=False)


def _text_rng(text: str, seed: int, domain: bytes) -> np.random.Generator:
    """Counter-based generator keyed by (seed, text); stable across runs."""
    h = hashlib.blake2b(
        text.encode("utf-8"),
        digest_size=16,
        key=int(seed).to_bytes(8, "little", signed=True),
        person=domain,
    ).digest()
    key = np.frombuffer(h, dtype="<u8")
    return np.random.Generator(np.random.Philox(key=key))


class SyntheticHashProvider(EmbeddingProvider):
    """Deterministic unit vectors: text bytes seed a Philox stream producing
    a standard-normal vector that is then normalized (uniform on the sphere,
    collisions improbable)."""

    def __init__(self, dim: int = 64, seed: int = 0, model_name: str | None = None):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self.model_name = model_name or f"synthetic-hash-{dim}d"

    def embed_batch(self, texts: Sequence[str], normalize: bool = False) -> list[EmbeddingVector]:
        _check_texts(texts)
        out = []
        for t in texts:
            g = _text_rng(t, self.seed, b"phem.hash")
            vec = g.standard_normal(self.dim)
            vec = vec / np.linalg.norm(vec)
            out.append(self._wrap(vec.astype(np.float32), normalize))
        return out


class SyntheticBlobProvider(EmbeddingProvider):
    """Class centroid plus Gaussian noise, normalized; deterministic per (seed, text)."""

    def __init__(
        self,
        class_of: Mapping[str, object],
        centroids: Mapping[object, np.ndarray],
        noise_sigma: float = 0.0,
        seed: int = 0,
        model_name: str | None = None,
    ):
        if noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        dims = {int(np.asarray(c).shape[0]) for c in centroids.values()}
        if len(dims) != 1:
            raise ValueError("all centroids must share one dimension")
        self.dim = dims.pop()
        self.class_of = dict(class_of)
        self.centroids = {k: np.asarray(v, dtype=np.float64) for k, v in centroids.items()}
        self.noise_sigma = float(noise_sigma)
        self.seed = seed
        self.model_name = model_name or f"synthetic-blob-{self.dim}d"

    @classmethod
    def orthogonal(
        cls,
        class_of: Mapping[str, object],
        dim: int,
        noise_sigma: float = 0.0,
        seed: int = 0,
    ) -> "SyntheticBlobProvider":
        """Centroids on the standard basis, one axis per class (dim >= #classes)."""
        classes = sorted({str(c) for c in class_of.values()})
        if dim < len(classes):
            raise ValueError(f"dim {dim} < number of classes {len(classes)}")
        centroids = {}
        for i, c in enumerate(classes):
            e = np.zeros(dim)
            e[i] = 1.0
            centroids[c] = e
        remapped = {t: str(c) for t, c in class_of.items()}
        return cls(remapped, centroids, noise_sigma=noise_sigma, seed=seed)

    def embed_batch(self, texts: Sequence[str], normalize: bool = False) -> list[EmbeddingVector]:
        _check_texts(texts)
        out = []
        for t in texts:
            cls = self.class_of.get(t)
            if cls is None:
                raise UnknownTextError(f"no class assignment for text {t!r}")
            centroid = self.centroids[cls]
            if self.noise_sigma > 0:
                g = _text_rng(t, self.seed, b"phem.blob")
                vec = centroid + self.noise_sigma * g.standard_normal(self.dim)
            else:
                vec = centroid
            vec = vec / np.linalg.norm(vec)
            out.append(self._wrap(vec.astype(np.float32), normalize))
        return out


class StoreProvider(EmbeddingProvider):
    """Serves vectors from a store file loaded once; immutable afterwards."""

    def __init__(self, path: str | Path, model_name: str | None = None):
        store = read_store(path)
        self.dim = store.dim
        self._vectors = store.as_dict()
        self.model_name = model_name or f"store:{Path(path).stem}"

    def embed_batch(self, texts: Sequence[str], normalize: bool = False) -> list[EmbeddingVector]:
        _check_texts(texts)
        missing = [t for t in texts if t not in self._vectors]
        if missing:
            preview = ", ".join(repr(m) for m in missing[:5])
            raise TextNotFoundError(f"{len(missing)} text(s) not in store: {preview}")
        return [self._wrap(self._vectors[t], normalize) for t in texts]


def _requests_transport(url: str, payload: dict, timeout: float) -> tuple[int, dict | None]:
    import requests

    try:
        resp = requests.post(url, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(str(exc)) from exc
    try:
        body = resp.json()
    except ValueError:
        body = None
    return resp.status_code, body


def post_with_retries(
    transport: Callable[[str, dict, float], tuple[int, dict | None]],
    url: str,
    payload: dict,
    *,
    timeout: float = 60.0,
    max_attempts: int = 3,
    backoff_base: float = 0.5,
    backoff_factor: float = 2.0,
    sleep: Callable[[float], None] = time.sleep,
) -> dict:
    """POST with retries on transport errors and 5xx responses.

    Backoff waits ``backoff_base * backoff_factor**i`` between attempts.
    Non-retryable statuses (4xx) and exhausted retries raise
    :class:`ProviderUnavailableError`.
    """
    last: str = "no attempt made"
    for attempt in range(max_attempts):
        if attempt > 0:
            sleep(backoff_base * backoff_factor ** (attempt - 1))
        try:
            status, body = transport(url, payload, timeout)
        except TransportError as exc:
            last = f"transport error: {exc}"
            log.warning("attempt %d/%d failed (%s)", attempt + 1, max_attempts, last)
            continue
        if status >= 500:
            last = f"server error {status}"
            log.warning("attempt %d/%d failed (%s)", attempt + 1, max_attempts, last)
            continue
        if status >= 400:
            raise ProviderUnavailableError(f"request rejected with status {status}: {body}")
        if body is None:
            raise ProviderUnavailableError("response body is not JSON")
        return body
    raise ProviderUnavailableError(f"retries exhausted ({max_attempts} attempts): {last}")


class RemoteProvider(EmbeddingProvider):
    """HTTP client for the embedding service.

    Sends at most ``max_batch`` texts per request, runs at most
    ``in_flight`` requests concurrently, and retries each request with
    exponential backoff (base 0.5 s, factor 2, 3 attempts) on transport
    errors and 5xx.  Determinism of the returned vectors is the service's
    contract.
    """

    def __init__(
        self,
        endpoint: str,
        *,
        model_name: str | None = None,
        max_batch: int = 64,
        in_flight: int = 4,
        timeout: float = 60.0,
        max_attempts: int = 3,
        backoff_base: float = 0.5,
        backoff_factor: float = 2.0,
        transport: Callable[[str, dict, float], tuple[int, dict | None]] | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if max_batch < 1 or in_flight < 1:
            raise ValueError("max_batch and in_flight must be positive")
        self.endpoint = endpoint.rstrip("/")
        self.model_name = model_name or "remote"
        self.max_batch = max_batch
        self.in_flight = in_flight
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self._transport = transport or _requests_transport
        self._sleep = sleep
        self.dim: int | None = None

    @property
    def embed_url(self) -> str:
        return f"{self.endpoint}/v1/embed"

    def _embed_chunk(self, chunk: list[str], normalize: bool) -> list[np.ndarray]:
        body = post_with_retries(
            self._transport,
            self.embed_url,
            {"texts": chunk, "normalize": normalize},
            timeout=self.timeout,
            max_attempts=self.max_attempts,
            backoff_base=self.backoff_base,
            backoff_factor=self.backoff_factor,
            sleep=self._sleep,
        )
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(chunk):
            raise ProviderUnavailableError(
                f"service returned {len(vectors) if isinstance(vectors, list) else 'no'} "
                f"vectors for {len(chunk)} texts"
            )
        dim = int(body.get("dim", len(vectors[0]) if vectors else 0))
        if self.dim is None:
            self.dim = dim
        elif dim != self.dim:
            raise DimensionMismatchError(f"service switched dim {self.dim} -> {dim}")
        model = body.get("model")
        if isinstance(model, str) and model:
            self.model_name = model
        return [np.asarray(v, dtype=np.float32) for v in vectors]

    def embed_batch(self, texts: Sequence[str], normalize: bool = False) -> list[EmbeddingVector]:
        _check_texts(texts)
        chunks = [list(texts[i : i + self.max_batch]) for i in range(0, len(texts), self.max_batch)]
        if len(chunks) == 1:
            arrays = self._embed_chunk(chunks[0], normalize)
        else:
            arrays = []
            with ThreadPoolExecutor(max_workers=min(self.in_flight, len(chunks))) as pool:
                for part in pool.map(lambda c: self._embed_chunk(c, normalize), chunks):
                    arrays.extend(part)
        return [EmbeddingVector(a, normalized=normalize) for a in arrays]


class CachingProvider(EmbeddingProvider):
    """Memoizing wrapper: each distinct text reaches the inner provider at
    most once per process, with an optional on-disk layer underneath.

    Raw (unnormalized) vectors are cached, keyed by a content hash of
    (model name, text); normalization is applied locally on the way out, so
    a cache entry serves both normalized and raw requests.
    """

    def __init__(self, inner: EmbeddingProvider, cache_dir: str | Path | None = None):
        self.inner = inner
        self.cache_dir = Path(cache_dir) / "emb" if cache_dir else None
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._memo: dict[str, np.ndarray] = {}

    @property
    def model_name(self) -> str:  # type: ignore[override]
        return self.inner.model_name

    @property
    def dim(self) -> int | None:  # type: ignore[override]
        return self.inner.dim

    def _disk_path(self, text: str) -> Path:
        digest = hashlib.sha256(
            self.inner.model_name.encode("utf-8") + b"\x00" + text.encode("utf-8")
        ).hexdigest()
        return self.cache_dir / f"{digest}.f32"  # type: ignore[operator]

    def embed_batch(self, texts: Sequence[str], normalize: bool = False) -> list[EmbeddingVector]:
        _check_texts(texts)
        missing: list[str] = []
        for t in texts:
            if t in self._memo:
                continue
            if self.cache_dir:
                p = self._disk_path(t)
                if p.exists():
                    self._memo[t] = np.frombuffer(p.read_bytes(), dtype="<f4").copy()
                    continue
            if t not in missing:
                missing.append(t)
        if missing:
            fetched = self.inner.embed_batch(missing, normalize=False)
            for t, vec in zip(missing, fetched):
                arr = vec.values.copy()
                self._memo[t] = arr
                if self.cache_dir:
                    self._disk_path(t).write_bytes(arr.astype("<f4").tobytes())
        out = []
        for t in texts:
            arr = self._memo[t]
            if normalize:
                out.append(l2_normalize(arr))
            else:
                out.append(EmbeddingVector(arr, normalized=False))
        return out


def stack_vectors(vectors: Sequence[EmbeddingVector]) -> np.ndarray:
    """Stack EmbeddingVectors into an (n, dim) float64 matrix."""
    if not vectors:
        raise ValueError("no vectors to stack")
    return np.stack([v.values for v in vectors]).astype(np.float64)
