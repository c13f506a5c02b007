from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np

from .base import DistilledSet, OutputKind, SetSpace, class_members, per_class_sizes
from .kmeans import closest_members

__all__ = ('WardTree', 'ward_tree', 'ward_clusters', 'distill_agglomerative')

logger = logging.getLogger(__name__)


class WardTree(NamedTuple):
    """Merge history: ``merges[t] = (slot_a, slot_b)`` with ``slot_a < slot_b``;
    the merged cluster keeps ``slot_a``. ``heights`` are Ward linkage distances."""

    merges: tuple[tuple[int, int], ...]
    heights: tuple[float, ...]
    size: int


def ward_tree(points: np.ndarray, *, stop_at: int = 1) -> WardTree:
    """Bottom-up Ward merges until ``stop_at`` clusters remain.

    Squared linkage distances follow the Lance-Williams recurrence; equal
    distances merge the smallest ``(i, j)`` slot pair first.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    sq = (points * points).sum(axis=1)
    dist = np.maximum(sq[:, None] - 2.0 * points @ points.T + sq[None, :], 0.0)
    dist[np.tril_indices(n)] = np.inf
    sizes = np.ones(n)
    active = np.ones(n, dtype=bool)

    merges: list[tuple[int, int]] = []
    heights: list[float] = []
    for _ in range(n - max(stop_at, 1)):
        flat = int(np.argmin(dist))  # row-major: smallest (i, j) among ties
        i, j = divmod(flat, n)
        merges.append((i, j))
        heights.append(float(np.sqrt(dist[i, j])))

        others = np.flatnonzero(active)
        others = others[(others != i) & (others != j)]
        d_ik = np.where(others < i, dist[others, i], dist[i, others])
        d_jk = np.where(others < j, dist[others, j], dist[j, others])
        n_i, n_j, n_k = sizes[i], sizes[j], sizes[others]
        merged = ((n_i + n_k) * d_ik + (n_j + n_k) * d_jk - n_k * dist[i, j]) / (n_i + n_j + n_k)

        lower, upper = others[others < i], others[others > i]
        dist[lower, i] = merged[others < i]
        dist[i, upper] = merged[others > i]
        dist[j, :] = np.inf
        dist[:, j] = np.inf
        sizes[i] += sizes[j]
        active[j] = False

    return WardTree(merges=tuple(merges), heights=tuple(heights), size=n)


def ward_clusters(tree: WardTree, k: int) -> np.ndarray:
    """Cluster index per point after cutting ``tree`` at ``k`` clusters.

    Clusters are numbered by their smallest member index.
    """
    owner = np.arange(tree.size)
    for a, b in tree.merges[:tree.size - k]:
        owner[owner == b] = a
    _, assignment = np.unique(owner, return_inverse=True)
    return assignment.astype(np.int64)


def distill_agglomerative(
    X: np.ndarray,
    y: np.ndarray,
    ipc: int,
    output: OutputKind | str = OutputKind.as_is,
    *,
    n_classes: int | None = None,
    space: SetSpace | str = SetSpace.original,
) -> DistilledSet:
    """Per-class Ward clustering into ``ipc`` groups; deterministic, no seed."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    output = OutputKind(output)
    members = class_members(y, n_classes)
    n_classes = len(members)

    features, labels, sources = [], [], []
    traces: dict[str, tuple[float, ...]] = {}
    for label, (rows, k) in enumerate(zip(members, per_class_sizes(members, ipc, 'agglomerative'))):
        points = X[rows]
        tree = ward_tree(points, stop_at=k)
        assignment = ward_clusters(tree, k)
        centers = np.stack([points[assignment == cluster].mean(axis=0) for cluster in range(k)])
        traces[f'height.{label}'] = tree.heights
        if output is OutputKind.closest_real:
            picks = rows[closest_members(points, centers, assignment)]
            features.append(X[picks])
            sources.append(picks)
        else:
            features.append(centers)
        labels.append(np.full(k, label, dtype=np.int64))

    logger.debug(f'Ward clustering produced {sum(map(len, labels))} instances over {n_classes} classes')
    return DistilledSet(
        np.concatenate(features), np.concatenate(labels), space,
        method='agglomerative-real' if output is OutputKind.closest_real else 'agglomerative',
        source_indices=np.concatenate(sources) if sources else None,
        traces=traces,
        n_classes=n_classes,
    )
