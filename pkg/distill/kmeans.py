"""Per-class Lloyd k-means with k-means++ seeding and best-of-restarts selection."""

from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np

from numerics import Rng
from .base import DistilledSet, OutputKind, SetSpace, class_members, per_class_sizes

__all__ = ('KMeansRun', 'lloyd', 'kmeans', 'closest_members', 'distill_kmeans')

logger = logging.getLogger(__name__)


class KMeansRun(NamedTuple):
    centers: np.ndarray
    assignment: np.ndarray
    sse_trace: tuple[float, ...]
    iterations: int
    converged: bool
    reseeded: int

    @property
    def sse(self) -> float:
        return self.sse_trace[-1]


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (points * points).sum(axis=1)[:, None] - 2.0 * points @ centers.T + (centers * centers).sum(axis=1)[None, :]
    return np.maximum(d2, 0.0)


def _plus_plus(points: np.ndarray, k: int, rng: Rng) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _squared_distances(points, points[chosen])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0.0:
            pick = int(rng.choice(n, 1, p=closest / total)[0])
        else:  # only duplicates of chosen centers remain
            remaining = np.setdiff1d(np.arange(n), chosen)
            pick = int(rng.choice(remaining, 1)[0])
        chosen.append(pick)
        closest = np.minimum(closest, _squared_distances(points, points[[pick]])[:, 0])
    return points[chosen].copy()


def _fill_empty(points: np.ndarray, assignment: np.ndarray, centers: np.ndarray, k: int) -> tuple[np.ndarray, int]:
    assignment = assignment.copy()
    moved = 0
    for cluster in range(k):
        if np.any(assignment == cluster):
            continue
        counts = np.bincount(assignment, minlength=k)
        spread = ((points - centers[assignment]) ** 2).sum(axis=1)
        spread[counts[assignment] < 2] = -1.0
        farthest = int(np.argmax(spread))
        assignment[farthest] = cluster
        centers[cluster] = points[farthest]
        moved += 1
    return assignment, moved


def _means(points: np.ndarray, assignment: np.ndarray, k: int) -> np.ndarray:
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, assignment, points)
    return sums / np.bincount(assignment, minlength=k)[:, None]


def _sse(points: np.ndarray, centers: np.ndarray, assignment: np.ndarray) -> float:
    return float(((points - centers[assignment]) ** 2).sum())


def lloyd(points: np.ndarray, k: int, rng: Rng, *, max_iter: int = 300) -> KMeansRun:
    """One seeded Lloyd run.

    Iterates until the assignment stops changing or ``max_iter`` updates
    were made. Clusters that lose all members take the point farthest from
    its center. The recorded SSE is non-increasing.
    """
    points = np.asarray(points, dtype=np.float64)
    centers = _plus_plus(points, k, rng)
    assignment = np.argmin(_squared_distances(points, centers), axis=1)
    trace: list[float] = []
    reseeded = 0
    converged = False
    iterations = 0

    while iterations < max_iter:
        iterations += 1
        assignment, moved = _fill_empty(points, assignment, centers, k)
        reseeded += moved
        centers = _means(points, assignment, k)
        trace.append(_sse(points, centers, assignment))
        updated = np.argmin(_squared_distances(points, centers), axis=1)
        if np.array_equal(updated, assignment):
            converged = True
            break
        if iterations == max_iter:
            break
        assignment = updated

    if reseeded:
        logger.warning(f'k-means reseeded {reseeded} empty clusters')
    return KMeansRun(centers, assignment, tuple(trace), iterations, converged, reseeded)


def kmeans(points: np.ndarray, k: int, rng: Rng, *, restarts: int = 5, max_iter: int = 300) -> KMeansRun:
    """Best of ``restarts`` Lloyd runs by final SSE; the earliest run wins ties."""
    best: KMeansRun | None = None
    for restart in range(restarts):
        run = lloyd(points, k, rng.child('restart', restart), max_iter=max_iter)
        if best is None or run.sse < best.sse:
            best = run
    return best


def closest_members(points: np.ndarray, centers: np.ndarray, assignment: np.ndarray) -> np.ndarray:
    """Per cluster, the member nearest its center; the lowest row index wins ties."""
    picks = np.empty(centers.shape[0], dtype=np.int64)
    for cluster in range(centers.shape[0]):
        members = np.flatnonzero(assignment == cluster)
        distances = ((points[members] - centers[cluster]) ** 2).sum(axis=1)
        picks[cluster] = members[int(np.argmin(distances))]
    return picks


def distill_kmeans(
    X: np.ndarray,
    y: np.ndarray,
    ipc: int,
    output: OutputKind | str = OutputKind.as_is,
    seed: int = 0,
    restarts: int = 5,
    *,
    max_iter: int = 300,
    n_classes: int | None = None,
    space: SetSpace | str = SetSpace.original,
) -> DistilledSet:
    """Cluster every class into ``ipc`` groups and emit centroids or their closest members."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    output = OutputKind(output)
    members = class_members(y, n_classes)
    n_classes = len(members)
    rng = Rng(seed).child('kmeans')

    features, labels, sources = [], [], []
    traces: dict[str, tuple[float, ...]] = {}
    for label, (rows, k) in enumerate(zip(members, per_class_sizes(members, ipc, 'kmeans'))):
        run = kmeans(X[rows], k, rng.child('class', label), restarts=restarts, max_iter=max_iter)
        traces[f'sse.{label}'] = run.sse_trace
        if output is OutputKind.closest_real:
            picks = rows[closest_members(X[rows], run.centers, run.assignment)]
            features.append(X[picks])
            sources.append(picks)
        else:
            features.append(run.centers)
        labels.append(np.full(k, label, dtype=np.int64))
        logger.debug(f'k-means class {label}: k={k} sse={run.sse:.6g} after {run.iterations} iterations')

    return DistilledSet(
        np.concatenate(features), np.concatenate(labels), space,
        method='kmeans-real' if output is OutputKind.closest_real else 'kmeans',
        seed=seed,
        source_indices=np.concatenate(sources) if sources else None,
        traces=traces,
        n_classes=n_classes,
    )
