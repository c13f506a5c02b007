"""Generated tables for desk-scale campaigns and tests."""

from __future__ import annotations

import logging
from typing import Any, Mapping

import numpy as np

from errors import ConfigError
from numerics import Rng
from .dataset import ColumnKind, ColumnSchema, Dataset

__all__ = ('make_rings', 'make_blobs', 'make_synthetic')

logger = logging.getLogger(__name__)


def make_rings(
    rows: int = 2000,
    n_features: int = 8,
    noise: float = 0.15,
    seed: int = 0,
    *,
    name: str = 'rings',
    categorical: bool = False,
) -> Dataset:
    """Two concentric noisy annuli, not linearly separable.

    The first two features carry the rings (radius 1 and 2); the remaining
    ones are random mixtures of them plus noise. With ``categorical`` a
    ``quadrant`` column holding the angle's quadrant is appended.
    """
    if n_features < 2:
        raise ConfigError(f'rings need at least 2 features, got {n_features}')
    rng = Rng(seed).child('rings')
    labels = np.arange(rows) % 2
    labels = labels[rng.child('order').permutation(rows)]
    angle = rng.child('angle').uniform(0.0, 2.0 * np.pi, rows)
    radius = 1.0 + labels + rng.child('radius').normal(rows, noise)
    plane = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
    mixing = rng.child('mixing').normal((2, n_features - 2))
    extra = plane @ mixing + rng.child('noise').normal((rows, n_features - 2), noise)
    values = np.concatenate([plane, extra], axis=1)

    schema = [ColumnSchema(f'x{j}', ColumnKind.numerical) for j in range(n_features)]
    columns: list[np.ndarray] = [values[:, j] for j in range(n_features)]
    if categorical:
        quadrant = np.floor(angle / (0.5 * np.pi)).astype(np.int64) % 4
        schema.append(ColumnSchema('quadrant', ColumnKind.categorical, ('q0', 'q1', 'q2', 'q3')))
        columns.append(np.array([f'q{q}' for q in quadrant], dtype=object))
    return Dataset(name, schema, columns, labels, n_classes=2, label_names=('inner', 'outer'))


def make_blobs(
    rows: int = 300,
    n_features: int = 4,
    n_classes: int = 3,
    spread: float = 0.5,
    seed: int = 0,
    *,
    name: str = 'blobs',
) -> Dataset:
    """Gaussian clusters around class centers drawn from ``N(0, 4 I)``."""
    rng = Rng(seed).child('blobs')
    labels = np.arange(rows) % n_classes
    centers = rng.child('centers').normal((n_classes, n_features), 2.0)
    values = centers[labels] + rng.child('noise').normal((rows, n_features), spread)
    schema = [ColumnSchema(f'x{j}', ColumnKind.numerical) for j in range(n_features)]
    return Dataset(name, schema, [values[:, j] for j in range(n_features)], labels, n_classes=n_classes)


_GENERATORS = {'rings': make_rings, 'blobs': make_blobs}


def make_synthetic(name: str, spec: Mapping[str, Any]) -> Dataset:
    """Build a generated dataset from a plan entry such as ``{kind: rings, rows: 2000}``."""
    spec = dict(spec)
    kind = spec.pop('kind', 'rings')
    generator = _GENERATORS.get(kind)
    if generator is None:
        raise ConfigError(f'unknown synthetic dataset kind {kind!r}; expected one of {sorted(_GENERATORS)}')
    try:
        dataset = generator(name=name, **spec)
    except TypeError as e:
        raise ConfigError(f'invalid {kind} settings {spec}: {e}') from e
    logger.info(f'Generated {dataset!r}')
    return dataset
