from __future__ import annotations

import logging
from enum import Enum
from typing import Any, NamedTuple, Sequence, TYPE_CHECKING

import numpy as np

from errors import ConfigError, ContractError, SchemaError
from .dataset import ColumnKind, Dataset

if TYPE_CHECKING:
    from typing import Self

__all__ = (
    'BinStrategy',
    'FeatureGroup',
    'Homogenizer',
    'fit_homogenizer',
    'encode_binary',
    'group_argmax_decode',
)

logger = logging.getLogger(__name__)


class BinStrategy(Enum):
    quantile = 'quantile'  # equal frequency
    uniform = 'uniform'  # equal width


class FeatureGroup(NamedTuple):
    """The one-hot slot range of a single input feature.

    Numerical groups hold ``len(edges) + 1`` bins (``edges`` are the interior
    cut points); categorical groups hold one slot per category. Either gains a
    trailing missing slot when ``has_missing`` is set.
    """

    name: str
    kind: ColumnKind
    offset: int
    size: int
    edges: tuple[float, ...] = ()
    categories: tuple[str, ...] = ()
    has_missing: bool = False

    @property
    def stop(self) -> int:
        return self.offset + self.size

    @property
    def missing_slot(self) -> int | None:
        return self.size - 1 if self.has_missing else None

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> Self:
        return cls(
            name=raw['name'],
            kind=ColumnKind(raw['kind']),
            offset=raw['offset'],
            size=raw['size'],
            edges=tuple(raw['edges']),
            categories=tuple(raw['categories']),
            has_missing=raw['has_missing'],
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            'name': self.name,
            'kind': self.kind.value,
            'offset': self.offset,
            'size': self.size,
            'edges': list(self.edges),
            'categories': list(self.categories),
            'has_missing': self.has_missing,
        }


class Homogenizer(NamedTuple):
    """Fitted map from heterogeneous rows to sparse binary vectors in {0,1}^D."""

    groups: tuple[FeatureGroup, ...]

    @property
    def dim(self) -> int:
        return self.groups[-1].stop if self.groups else 0

    @property
    def n_features(self) -> int:
        """``c + r``: the number of ones in every encoded row."""
        return len(self.groups)

    @property
    def slices(self) -> tuple[tuple[int, int], ...]:
        return tuple((group.offset, group.stop) for group in self.groups)

    @property
    def group_sizes(self) -> np.ndarray:
        return np.array([group.size for group in self.groups], dtype=np.int64)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> Self:
        return cls(groups=tuple(FeatureGroup.from_dict(group) for group in raw['groups']))

    def to_dict(self) -> dict[str, Any]:
        return {'groups': [group.to_dict() for group in self.groups]}

    def __repr__(self) -> str:
        return f'<Homogenizer D={self.dim} features={self.n_features}>'


def _bin_edges(values: np.ndarray, bins: int, strategy: BinStrategy, name: str) -> tuple[float, ...]:
    if values.size == 0:
        logger.warning(f'Numerical column {name!r} has no observed training values; using a single bin')
        return ()
    if strategy is BinStrategy.quantile:
        boundaries = np.quantile(values, np.linspace(0.0, 1.0, bins + 1))
    else:
        boundaries = np.linspace(values.min(), values.max(), bins + 1)
    boundaries = np.unique(boundaries)
    if boundaries.size < 2:
        logger.warning(f'Numerical column {name!r} is constant; using a single bin')
        return ()
    if boundaries.size - 1 < bins:
        logger.warning(f'Numerical column {name!r} has tied {strategy.value} edges; {boundaries.size - 1} of {bins} bins kept')
    return tuple(float(edge) for edge in boundaries[1:-1])


def fit_homogenizer(
    ds: Dataset,
    train_indices: Sequence[int] | np.ndarray,
    bins: int = 10,
    strategy: BinStrategy | str = BinStrategy.quantile,
) -> Homogenizer:
    """Fit per-feature bins and category indices on the training rows.

    Parameters
    ----------
    ds: Dataset
        Source table.
    train_indices: Sequence[int]
        Rows the bins and categories are learned from.
    bins: int
        Requested bins per numerical feature; duplicate quantile edges are merged.
    strategy: BinStrategy
        ``quantile`` (equal frequency) or ``uniform`` (equal width).
    """
    if bins < 2:
        raise ConfigError(f'bins per numerical feature must be at least 2, got {bins}')
    strategy = BinStrategy(strategy)
    train_indices = np.asarray(train_indices, dtype=np.int64)

    groups: list[FeatureGroup] = []
    offset = 0
    for column, values in zip(ds.schema, ds.columns):
        values = values[train_indices]
        if column.kind is ColumnKind.numerical:
            missing = np.isnan(values)
            edges = _bin_edges(values[~missing], bins, strategy, column.name)
            has_missing = bool(missing.any())
            group = FeatureGroup(
                column.name, column.kind, offset, len(edges) + 1 + has_missing,
                edges=edges, has_missing=has_missing,
            )
        else:
            missing = np.array([value is None for value in values], dtype=bool)
            if column.categories is not None:
                categories = column.categories
            else:
                categories = tuple(sorted({str(value) for value in values[~missing]}))
            has_missing = bool(missing.any()) or len(categories) < 2
            if not categories:
                raise SchemaError(f'categorical column {column.name!r} has no observed training categories')
            group = FeatureGroup(
                column.name, column.kind, offset, len(categories) + has_missing,
                categories=categories, has_missing=has_missing,
            )
        groups.append(group)
        offset = group.stop

    homogenizer = Homogenizer(groups=tuple(groups))
    logger.info(f'Fitted {homogenizer!r} on {train_indices.size} rows of {ds.name!r}')
    return homogenizer


def _slots_for(group: FeatureGroup, values: np.ndarray) -> np.ndarray:
    slots = np.empty(values.size, dtype=np.int64)
    if group.kind is ColumnKind.numerical:
        missing = np.isnan(values)
        slots[~missing] = np.searchsorted(np.asarray(group.edges, dtype=np.float64), values[~missing], side='right')
    else:
        missing = np.array([value is None for value in values], dtype=bool)
        lookup = {category: i for i, category in enumerate(group.categories)}
        unseen = 0
        for i in np.flatnonzero(~missing):
            slot = lookup.get(str(values[i]))
            if slot is None:
                unseen += 1
                slot = group.missing_slot if group.has_missing else 0
            slots[i] = slot
        if unseen:
            target = 'the missing slot' if group.has_missing else 'category 0'
            logger.warning(f'{unseen} unseen categories in {group.name!r} mapped to {target}')

    if missing.any():
        if group.has_missing:
            slots[missing] = group.missing_slot
        else:
            logger.warning(f'{int(missing.sum())} missing values in {group.name!r} without a missing slot mapped to slot 0')
            slots[missing] = 0
    return slots


def encode_binary(h: Homogenizer, ds: Dataset, indices: Sequence[int] | np.ndarray | None = None) -> np.ndarray:
    """Map rows to ``|indices| x D`` binary vectors with exactly ``c + r`` ones per row.

    Numerical values fall into the half-open bin containing them, clamping to
    the edge bins outside the training range.
    """
    if len(ds.schema) != len(h.groups) or any(
        column.name != group.name or column.kind is not group.kind
        for column, group in zip(ds.schema, h.groups)
    ):
        raise SchemaError(f'dataset {ds.name!r} does not match the homogenizer schema')
    indices = np.arange(ds.n_rows) if indices is None else np.asarray(indices, dtype=np.int64)

    out = np.zeros((indices.size, h.dim))
    rows = np.arange(indices.size)
    for group, values in zip(h.groups, ds.columns):
        out[rows, group.offset + _slots_for(group, values[indices])] = 1.0
    return out


def group_argmax_decode(h: Homogenizer, soft: np.ndarray, *, tolerance: float = 1e-6) -> np.ndarray:
    """Snap per-group probability vectors to one-hot form, lowest index winning ties.

    Raises
    ------
    ContractError
        If any group's entries do not sum to one within ``tolerance``.
    """
    soft = np.asarray(soft, dtype=np.float64)
    if soft.ndim != 2 or soft.shape[1] != h.dim:
        raise ContractError(f'expected an (n, {h.dim}) matrix, got {soft.shape}')
    hard = np.zeros_like(soft)
    rows = np.arange(soft.shape[0])
    for group in h.groups:
        block = soft[:, group.offset:group.stop]
        deviation = np.abs(block.sum(axis=1) - 1.0)
        if np.any(deviation > tolerance):
            raise ContractError(f'group {group.name!r} sums deviate from 1 by up to {deviation.max():.3e}')
        hard[rows, group.offset + np.argmax(block, axis=1)] = 1.0
    return hard
