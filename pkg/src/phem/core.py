"""Shared domain types and vector math.

Every other module works in terms of these types: phrases, keyword sets,
prompt configuration, and fixed-dimension float32 embedding vectors.
All types are immutable values and safe to share across threads.

Vectors are stored as 32-bit floats; reductions (dot products, norms)
accumulate in 64-bit and round at the end.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PhemError",
    "ZeroVectorError",
    "DimensionMismatchError",
    "InvariantViolation",
    "NORM_TOLERANCE",
    "Phrase",
    "EmbeddingVector",
    "KeywordSet",
    "PromptConfig",
    "is_valid_keyword",
    "l2_normalize",
    "cosine_similarity",
]

NORM_TOLERANCE = 1e-4
_ZERO_NORM_FLOOR = 1e-12


class PhemError(Exception):
    """Base class for all errors raised by this package."""


class ZeroVectorError(PhemError):
    """A vector with (near-)zero L2 norm where a direction is required."""


class DimensionMismatchError(PhemError):
    """Two vectors (or a vector and a store) disagree on dimensionality."""


class InvariantViolation(PhemError):
    """An internal consistency check failed; indicates a bug, not bad input."""


@dataclass(frozen=True)
class Phrase:
    """An entity surface form, optionally carrying a gold class label.

    ``label`` is an index into the owning corpus' class inventory (or None
    for unlabeled phrases).  ``dataset_id`` records provenance.
    """

    surface: str
    label: int | None = None
    dataset_id: str = ""

    def __post_init__(self) -> None:
        if not isinstance(self.surface, str) or not self.surface.strip():
            raise ValueError("phrase surface must be non-empty after trimming whitespace")
        if "\n" in self.surface or "\r" in self.surface:
            raise ValueError(f"phrase surface contains a newline: {self.surface!r}")


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """A fixed-dimension float32 vector with a normalization flag.

    Values are validated to be finite; when ``normalized`` is set the L2
    norm must lie within ``NORM_TOLERANCE`` of 1.  The backing array is
    made read-only so instances behave as values.
    """

    values: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float32, copy=True)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("embedding values must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding values must be finite (no NaN/Inf)")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if self.normalized:
            norm = float(np.linalg.norm(arr.astype(np.float64)))
            if abs(norm - 1.0) > NORM_TOLERANCE:
                raise ValueError(f"vector flagged normalized but |v| = {norm:.6g}")

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def to_array(self) -> np.ndarray:
        """Read-only float32 view of the values."""
        return self.values

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingVector):
            return NotImplemented
        return self.normalized == other.normalized and np.array_equal(
            self.values, other.values
        )

    def __repr__(self) -> str:  # keep reprs short for big vectors
        head = ", ".join(f"{v:.4g}" for v in self.values[:4])
        tail = ", ..." if self.dim > 4 else ""
        return f"EmbeddingVector(dim={self.dim}, [{head}{tail}], normalized={self.normalized})"


def is_valid_keyword(token: str) -> bool:
    """Whole-word filter for domain keywords: letters only, length >= 2."""
    return len(token) >= 2 and token.isalpha()


@dataclass(frozen=True)
class KeywordSet:
    """Ordered domain keywords generated for one phrase.

    Keywords are lowercase, pairwise distinct, pass :func:`is_valid_keyword`,
    and never case-fold to a whitespace token of the phrase itself.
    """

    phrase_surface: str
    keywords: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "keywords", tuple(self.keywords))
        surface_tokens = {t.casefold() for t in self.phrase_surface.split()}
        seen: set[str] = set()
        for kw in self.keywords:
            if kw != kw.lower():
                raise ValueError(f"keyword not lowercase: {kw!r}")
            if not is_valid_keyword(kw):
                raise ValueError(f"keyword fails whole-word filter: {kw!r}")
            folded = kw.casefold()
            if folded in surface_tokens:
                raise ValueError(f"keyword {kw!r} collides with a token of {self.phrase_surface!r}")
            if folded in seen:
                raise ValueError(f"duplicate keyword: {kw!r}")
            seen.add(folded)

    def __len__(self) -> int:
        return len(self.keywords)

    def truncated(self, k: int) -> "KeywordSet":
        """Prefix of at most ``k`` keywords (selection order is stable)."""
        if k < 0:
            raise ValueError("k must be non-negative")
        return KeywordSet(self.phrase_surface, self.keywords[:k])


@dataclass(frozen=True)
class PromptConfig:
    """Knobs for keyword generation and prompt assembly."""

    num_keywords: int = 3
    mlm_fetch_k: int = 20
    template_id: str = "photo_of"

    def __post_init__(self) -> None:
        if self.num_keywords < 0:
            raise ValueError("num_keywords must be non-negative")
        if self.mlm_fetch_k < 1:
            raise ValueError("mlm_fetch_k must be positive")
        if self.num_keywords > self.mlm_fetch_k:
            raise ValueError("num_keywords cannot exceed mlm_fetch_k")
        if self.template_id != "photo_of":
            raise ValueError(f"unknown template_id: {self.template_id!r}")


def _as_float64(v: "EmbeddingVector | Sequence[float] | np.ndarray") -> np.ndarray:
    if isinstance(v, EmbeddingVector):
        return v.values.astype(np.float64)
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("expected a 1-D vector")
    return arr


def l2_normalize(v: "EmbeddingVector | Sequence[float] | np.ndarray") -> EmbeddingVector:
    """Scale ``v`` to unit L2 norm, preserving direction.

    Raises :class:`ZeroVectorError` when the norm falls below 1e-12.
    """
    arr = _as_float64(v)
    norm = float(np.linalg.norm(arr))
    if norm < _ZERO_NORM_FLOOR:
        raise ZeroVectorError(f"cannot normalize vector with |v| = {norm:.3g}")
    return EmbeddingVector((arr / norm).astype(np.float32), normalized=True)


def cosine_similarity(
    a: "EmbeddingVector | Sequence[float] | np.ndarray",
    b: "EmbeddingVector | Sequence[float] | np.ndarray",
) -> float:
    """Cosine of the angle between two vectors, in [-1, 1].

    Exactly symmetric in its arguments: the elementwise product commutes
    and both reductions run in the same index order.
    """
    va = _as_float64(a)
    vb = _as_float64(b)
    if va.shape[0] != vb.shape[0]:
        raise DimensionMismatchError(f"dim {va.shape[0]} vs {vb.shape[0]}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na < _ZERO_NORM_FLOOR or nb < _ZERO_NORM_FLOOR:
        raise ZeroVectorError("cosine similarity undefined for zero vectors")
    value = float(np.sum(va * vb)) / (na * nb)
    return min(1.0, max(-1.0, value))
