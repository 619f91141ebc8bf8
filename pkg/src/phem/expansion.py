"""Entity set expansion: seed-centroid nearest neighbors and AP@K / MAP@K.

Expansion is single shot: average the three seed vectors and rank the rest
of the vocabulary by cosine similarity to that centroid.  Ties break
lexicographically on the surface so runs are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import EmbeddingVector, PhemError, Phrase, ZeroVectorError
from .ingest import SeedQuery

__all__ = [
    "MissingSeedEmbeddingError",
    "EmptyQuerySetError",
    "RankedList",
    "expand",
    "ap_at_k",
    "map_at_k",
]


class MissingSeedEmbeddingError(PhemError):
    """A seed surface has no vector in the vocabulary."""


class EmptyQuerySetError(PhemError):
    """MAP requested over zero queries."""


@dataclass(frozen=True)
class RankedList:
    """Scored expansion candidates for one query, best first."""

    query: SeedQuery
    entries: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple((s, float(x)) for s, x in self.entries))
        seeds = set(self.query.seed_surfaces)
        prev = None
        for surface, score in self.entries:
            if surface in seeds:
                raise ValueError(f"seed {surface!r} appears among ranked entries")
            if prev is not None and score > prev:
                raise ValueError("entry scores must be non-increasing")
            prev = score

    @property
    def surfaces(self) -> list[str]:
        return [s for s, _ in self.entries]


def expand(
    query: SeedQuery,
    vocabulary: Sequence[tuple[Phrase, EmbeddingVector]],
    top_n: int,
) -> RankedList:
    """Rank non-seed vocabulary items by cosine to the mean seed vector."""
    if top_n < 1:
        raise ValueError("top_n must be positive")
    if top_n > len(vocabulary) - 3:
        raise ValueError(f"top_n={top_n} exceeds available candidates ({len(vocabulary) - 3})")

    by_surface = {p.surface: v for p, v in vocabulary}
    seeds = query.seed_surfaces
    missing = [s for s in seeds if s not in by_surface]
    if missing:
        raise MissingSeedEmbeddingError(f"no embedding for seed(s): {', '.join(map(repr, missing))}")

    centroid = np.mean([by_surface[s].values.astype(np.float64) for s in seeds], axis=0)
    c_norm = float(np.linalg.norm(centroid))
    if c_norm < 1e-12:
        raise ZeroVectorError("seed centroid has zero norm")

    seed_set = set(seeds)
    candidates = [(p, v) for p, v in vocabulary if p.surface not in seed_set]
    matrix = np.stack([v.values for _, v in candidates]).astype(np.float64)
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms < 1e-12):
        bad = candidates[int(np.argmin(norms))][0].surface
        raise ZeroVectorError(f"candidate {bad!r} has a zero vector")
    scores = (matrix @ centroid) / (norms * c_norm)
    scores = np.clip(scores, -1.0, 1.0)

    ranked = sorted(
        ((p.surface, float(s)) for (p, _), s in zip(candidates, scores)),
        key=lambda e: (-e[1], e[0]),
    )
    return RankedList(query=query, entries=tuple(ranked[:top_n]))


def ap_at_k(ranked: "RankedList | Sequence[str]", relevant: set[str], k: int) -> float:
    """Average precision truncated at position ``k``.

    ``sum(precision@i * rel(i) for i in 1..k) / min(k, |relevant|)``; a
    perfect length-k relevant prefix scores exactly 1.0.  Returns 0.0 when
    ``relevant`` is empty.
    """
    if k < 1:
        raise ValueError("k must be positive")
    surfaces = ranked.surfaces if isinstance(ranked, RankedList) else list(ranked)
    if not relevant:
        return 0.0
    hits = 0
    acc = 0.0
    for i, surface in enumerate(surfaces[:k], start=1):
        if surface in relevant:
            hits += 1
            acc += hits / i
    return acc / min(k, len(relevant))


def map_at_k(queries: Sequence[tuple["RankedList | Sequence[str]", set[str]]], k: int) -> float:
    """Unweighted mean of AP@k over queries."""
    if not queries:
        raise EmptyQuerySetError("MAP needs at least one query")
    return float(np.mean([ap_at_k(r, rel, k) for r, rel in queries]))
