"""K-means clustering and partition-agreement metrics.

``kmeans`` is a plain Lloyd's algorithm with k-means++ seeding, multiple
restarts merged by minimal inertia, and empty-cluster repair by reseeding
from the farthest point.  The agreement metrics are matched accuracy
(maximum-weight one-to-one cluster/class matching over the contingency
table) and normalized mutual information with natural-log entropies and
arithmetic-mean normalization.

Everything here is deterministic given the seed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import EmbeddingVector, InvariantViolation, PhemError

__all__ = [
    "KTooLargeError",
    "EmptyMatrixError",
    "LengthMismatchError",
    "DegenerateInputWarning",
    "ClusteringResult",
    "ContingencyTable",
    "kmeans",
    "hungarian_max",
    "clustering_accuracy",
    "nmi",
]


class KTooLargeError(PhemError):
    """Requested more clusters than there are points."""


class EmptyMatrixError(PhemError):
    """Assignment requested over an empty weight matrix."""


class LengthMismatchError(PhemError):
    """Two label sequences of different length were compared."""


class DegenerateInputWarning(UserWarning):
    """All points identical with k > 1; clusters beyond the first are singletons."""


@dataclass(frozen=True)
class ClusteringResult:
    """Outcome of one k-means run (the best restart)."""

    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int
    seed: int
    restart: int
    inertia_history: tuple[float, ...]

    def __post_init__(self) -> None:
        self.assignments.setflags(write=False)
        self.centroids.setflags(write=False)


def _as_matrix(vectors: "Sequence[EmbeddingVector] | np.ndarray") -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        x = np.asarray(vectors, dtype=np.float64)
    else:
        x = np.stack([np.asarray(v.values if isinstance(v, EmbeddingVector) else v) for v in vectors]).astype(np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("expected a non-empty (n, dim) matrix of vectors")
    return x


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # |x - c|^2 = |x|^2 + |c|^2 - 2 x.c, clipped against negative round-off
    d2 = (
        np.einsum("ij,ij->i", x, x)[:, None]
        + np.einsum("ij,ij->i", centers, centers)[None, :]
        - 2.0 * (x @ centers.T)
    )
    return np.maximum(d2, 0.0)


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = x[first]
    d2 = _sq_dists(x, centers[:1]).ravel()
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = x[idx]
        d2 = np.minimum(d2, _sq_dists(x, centers[j : j + 1]).ravel())
    return centers


def _repair_empty_clusters(
    x: np.ndarray, centers: np.ndarray, assign: np.ndarray, d2: np.ndarray
) -> None:
    """Reseed each empty cluster from the farthest point (in place).

    Donor clusters keep at least one member; with all points coincident the
    'farthest' point is arbitrary and the reseeded clusters are singletons.
    """
    k = centers.shape[0]
    counts = np.bincount(assign, minlength=k)
    empties = np.flatnonzero(counts == 0)
    if empties.size == 0:
        return
    point_cost = d2[np.arange(x.shape[0]), assign].copy()
    order = np.argsort(-point_cost, kind="stable")
    cursor = 0
    for j in empties:
        while cursor < order.size and counts[assign[order[cursor]]] <= 1:
            cursor += 1
        if cursor >= order.size:
            break
        p = int(order[cursor])
        cursor += 1
        counts[assign[p]] -= 1
        assign[p] = j
        counts[j] = 1
        centers[j] = x[p]
        point_cost[p] = 0.0


def _lloyd(
    x: np.ndarray, centers: np.ndarray, max_iter: int, tol: float
) -> tuple[np.ndarray, np.ndarray, list[float], int]:
    history: list[float] = []
    assign = np.zeros(x.shape[0], dtype=np.int64)
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(x, centers)
        assign = np.argmin(d2, axis=1).astype(np.int64)
        _repair_empty_clusters(x, centers, assign, d2)
        new_centers = np.empty_like(centers)
        for j in range(centers.shape[0]):
            members = x[assign == j]
            new_centers[j] = members.mean(axis=0) if members.size else centers[j]
        inertia = float(np.sum((x - new_centers[assign]) ** 2))
        if history and inertia > history[-1] + 1e-9 * max(1.0, history[-1]):
            raise InvariantViolation(
                f"inertia increased across iterations: {history[-1]!r} -> {inertia!r}"
            )
        history.append(inertia)
        shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        if shift < tol:
            break
    return assign, centers, history, it


def kmeans(
    vectors: "Sequence[EmbeddingVector] | np.ndarray",
    k: int,
    *,
    n_restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-4,
    seed: int = 0,
) -> ClusteringResult:
    """Cluster vectors into ``k`` groups; returns the best of ``n_restarts``.

    Each restart draws k-means++ centers from its own child stream of
    ``seed`` and runs Lloyd iterations until the largest centroid shift
    drops below ``tol`` or ``max_iter`` is hit.  Restarts are merged by
    minimal inertia, ties broken by the lowest restart index.  Within one
    restart the inertia is checked to be non-increasing per iteration.
    """
    x = _as_matrix(vectors)
    n = x.shape[0]
    if k < 1:
        raise ValueError("k must be positive")
    if k > n:
        raise KTooLargeError(f"k={k} exceeds the number of points ({n})")
    if n_restarts < 1 or max_iter < 1:
        raise ValueError("n_restarts and max_iter must be positive")
    if np.allclose(x, x[0], atol=0.0, rtol=0.0) and k > 1:
        warnings.warn(
            "all points identical; extra clusters reseeded as singletons",
            DegenerateInputWarning,
            stacklevel=2,
        )

    children = np.random.SeedSequence(seed).spawn(n_restarts)
    best: ClusteringResult | None = None
    for r in range(n_restarts):
        rng = np.random.default_rng(children[r])
        centers0 = _kmeans_pp_init(x, k, rng)
        assign, centers, history, n_iter = _lloyd(x, centers0, max_iter, tol)
        inertia = history[-1]
        if best is None or inertia < best.inertia:
            best = ClusteringResult(
                assignments=assign,
                centroids=centers,
                inertia=inertia,
                n_iter=n_iter,
                seed=seed,
                restart=r,
                inertia_history=tuple(history),
            )

    recomputed = float(np.sum((x - best.centroids[best.assignments]) ** 2))
    if abs(recomputed - best.inertia) > 1e-6 * max(1.0, abs(recomputed)):
        raise InvariantViolation(f"inertia {best.inertia!r} != recomputed objective {recomputed!r}")
    return best


def hungarian_max(weights: "np.ndarray | Sequence[Sequence[float]]") -> tuple[list[tuple[int, int]], float]:
    """Maximum-total matching of min(rows, cols) row/col pairs.

    Returns ``(pairs, total)`` where pairs is sorted by row index and each
    row and column is used at most once.  O(n^3) shortest-augmenting-path
    algorithm with potentials.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2 or w.size == 0:
        raise EmptyMatrixError("weight matrix must be 2-D and non-empty")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")

    transposed = w.shape[0] > w.shape[1]
    a = -(w.T if transposed else w)  # minimize negated weights
    n, m = a.shape

    INF = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)  # p[j] = 1-based row matched to column j
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            row = a[i0 - 1]
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    pairs = []
    for j in range(1, m + 1):
        if p[j] != 0:
            r, c = p[j] - 1, j - 1
            pairs.append((c, r) if transposed else (r, c))
    pairs.sort()
    total = float(sum(w[r, c] for r, c in pairs))
    return pairs, total


@dataclass(frozen=True)
class ContingencyTable:
    """Joint counts between two label sequences (rows x cols)."""

    matrix: np.ndarray
    row_totals: np.ndarray
    col_totals: np.ndarray
    n: int

    @classmethod
    def from_labels(cls, rows: Sequence, cols: Sequence) -> "ContingencyTable":
        if len(rows) != len(cols):
            raise LengthMismatchError(f"{len(rows)} row labels vs {len(cols)} col labels")
        if len(rows) == 0:
            raise ValueError("label sequences must be non-empty")
        _, ri = np.unique(np.asarray(rows), return_inverse=True)
        _, ci = np.unique(np.asarray(cols), return_inverse=True)
        matrix = np.zeros((int(ri.max()) + 1, int(ci.max()) + 1), dtype=np.int64)
        np.add.at(matrix, (ri, ci), 1)
        table = cls(
            matrix=matrix,
            row_totals=matrix.sum(axis=1),
            col_totals=matrix.sum(axis=0),
            n=len(rows),
        )
        if int(table.matrix.sum()) != table.n:
            raise InvariantViolation("contingency total != number of items")
        return table


def clustering_accuracy(assignments: Sequence, gold_labels: Sequence) -> float:
    """Fraction of points correct under the best one-to-one cluster -> class map."""
    table = ContingencyTable.from_labels(assignments, gold_labels)
    _, total = hungarian_max(table.matrix.astype(np.float64))
    return total / table.n


def _entropy(counts: np.ndarray, n: int) -> float:
    probs = counts[counts > 0] / n
    return float(-np.sum(probs * np.log(probs)))


def nmi(assignments: Sequence, gold_labels: Sequence) -> float:
    """Mutual information normalized by the arithmetic mean of the entropies.

    1.0 when both partitions are trivial (single cluster each); 0.0 whenever
    the mutual information is zero.
    """
    table = ContingencyTable.from_labels(assignments, gold_labels)
    n = table.n
    h_rows = _entropy(table.row_totals, n)
    h_cols = _entropy(table.col_totals, n)
    if h_rows == 0.0 and h_cols == 0.0:
        return 1.0

    mi = 0.0
    nz = np.nonzero(table.matrix)
    for r, c in zip(*nz):
        nij = table.matrix[r, c]
        mi += (nij / n) * np.log(nij * n / (table.row_totals[r] * table.col_totals[c]))
    if mi <= 0.0:
        return 0.0
    return float(min(1.0, mi / ((h_rows + h_cols) / 2.0)))
