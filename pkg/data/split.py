from __future__ import annotations

import logging
from typing import NamedTuple, Sequence

import numpy as np

from errors import ConfigError, StratificationError
from numerics import Rng
from .dataset import Dataset

__all__ = ('DEFAULT_RATIOS', 'DataSplit', 'stratified_split')

logger = logging.getLogger(__name__)

DEFAULT_RATIOS = (0.70, 0.15, 0.15)


class DataSplit(NamedTuple):
    """Disjoint train/validation/test index arrays covering a dataset."""

    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray

    def __repr__(self) -> str:
        return f'<DataSplit train={self.train.size} validation={self.validation.size} test={self.test.size}>'


def _allocate(count: int, ratios: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of ``count`` items over ``ratios``.

    Remainder ties go to the earlier part. Every part receives at least one
    item, taken from the training part.
    """
    exact = [count * ratio for ratio in ratios]
    sizes = [int(np.floor(value)) for value in exact]
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[:count - sum(sizes)]:
        sizes[i] += 1
    for i in range(1, len(sizes)):
        if sizes[i] == 0 and sizes[0] > 1:
            sizes[i] += 1
            sizes[0] -= 1
    return sizes


def stratified_split(ds: Dataset, ratios: Sequence[float] = DEFAULT_RATIOS, seed: int = 0) -> DataSplit:
    """Per-class shuffled partition into train, validation and test.

    Raises
    ------
    StratificationError
        If a class has fewer than three samples.
    """
    ratios = tuple(float(ratio) for ratio in ratios)
    if len(ratios) != 3 or any(ratio < 0 for ratio in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f'split ratios must be three non-negative values summing to 1, got {ratios}')

    counts = ds.class_counts()
    short = [label for label, count in enumerate(counts) if count < 3]
    if short:
        raise StratificationError(f'classes {short} of {ds.name!r} have fewer than 3 samples')

    rng = Rng(seed)
    parts: list[list[np.ndarray]] = [[], [], []]
    for label in range(ds.n_classes):
        members = np.flatnonzero(ds.labels == label)
        members = members[rng.child('class', label).permutation(members.size)]
        start = 0
        for part, size in zip(parts, _allocate(members.size, ratios)):
            part.append(members[start:start + size])
            start += size

    train, validation, test = (np.sort(np.concatenate(part)) for part in parts)
    split = DataSplit(train=train, validation=validation, test=test)
    logger.debug(f'Split {ds.name!r} into {split!r}')
    return split
