from __future__ import annotations

import logging

import numpy as np

from numerics import Rng
from .base import DistilledSet, SetSpace, class_members, per_class_sizes

__all__ = ('distill_random', 'random_indices')

logger = logging.getLogger(__name__)


def random_indices(y: np.ndarray, ipc: int, seed: int, *, n_classes: int | None = None) -> np.ndarray:
    """Per-class uniform sample without replacement, grouped by class, ascending within a class."""
    members = class_members(y, n_classes)
    rng = Rng(seed).child('random')
    picks = [
        np.sort(rng.child('class', label).choice(rows, size, replace=False))
        for label, (rows, size) in enumerate(zip(members, per_class_sizes(members, ipc, 'random')))
    ]
    return np.concatenate(picks)


def distill_random(
    X: np.ndarray,
    y: np.ndarray,
    ipc: int,
    seed: int = 0,
    *,
    n_classes: int | None = None,
    space: SetSpace | str = SetSpace.original,
) -> DistilledSet:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n_classes = int(y.max()) + 1 if n_classes is None else n_classes
    rows = random_indices(y, ipc, seed, n_classes=n_classes)
    logger.debug(f'Sampled {rows.size} of {y.size} rows at ipc={ipc}')
    return DistilledSet(
        X[rows], y[rows], space,
        method='random', seed=seed, source_indices=rows, n_classes=n_classes,
    )
