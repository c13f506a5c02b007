from __future__ import annotations

import logging
from enum import Enum
from pathlib import Path
from typing import Any, NamedTuple, Sequence, TYPE_CHECKING

import numpy as np
import pandas as pd
import yaml

from errors import SchemaError

if TYPE_CHECKING:
    from typing import Self

__all__ = ('ColumnKind', 'ColumnSchema', 'Dataset', 'MISSING_MARKERS', 'load_csv')

logger = logging.getLogger(__name__)

MISSING_MARKERS = frozenset({'', '?'})


class ColumnKind(Enum):
    numerical = 'numerical'
    categorical = 'categorical'


class ColumnSchema(NamedTuple):
    name: str
    kind: ColumnKind
    categories: tuple[str, ...] | None = None  # explicit order, categorical only

    @classmethod
    def from_dict(cls, name: str, raw: dict[str, Any] | str) -> Self:
        if isinstance(raw, str):
            raw = {'kind': raw}
        try:
            kind = ColumnKind(raw['kind'])
        except (KeyError, ValueError) as exc:
            raise SchemaError(f'column {name!r} needs kind "numerical" or "categorical", got {raw!r}') from exc
        categories = raw.get('categories')
        if categories is not None:
            if kind is not ColumnKind.categorical:
                raise SchemaError(f'column {name!r} lists categories but is not categorical')
            categories = tuple(str(category) for category in categories)
        return cls(name=name, kind=kind, categories=categories)

    def to_dict(self) -> dict[str, Any]:
        raw: dict[str, Any] = {'kind': self.kind.value}
        if self.categories is not None:
            raw['categories'] = list(self.categories)
        return raw


class Dataset:
    """A heterogeneous classification table.

    Numerical columns are stored as float arrays with ``nan`` marking missing
    cells; categorical columns are object arrays with ``None`` marking missing
    cells.

    Parameters
    ----------
    name: str
        Dataset name used in run records.
    schema: Sequence[ColumnSchema]
        One entry per feature column, in column order.
    columns: Sequence[np.ndarray]
        Column values aligned with ``schema``.
    labels: np.ndarray
        Integer labels in ``0..n_classes-1``.
    label_names: Sequence[str] | None
        Original label strings by index.
    """

    __slots__ = ('name', 'schema', 'columns', 'labels', 'n_classes', 'label_names')

    def __init__(
        self,
        name: str,
        schema: Sequence[ColumnSchema],
        columns: Sequence[np.ndarray],
        labels: np.ndarray,
        *,
        n_classes: int | None = None,
        label_names: Sequence[str] | None = None,
    ) -> None:
        labels = np.asarray(labels, dtype=np.int64)
        if len(schema) != len(columns):
            raise SchemaError(f'schema has {len(schema)} columns but {len(columns)} were given')
        if labels.size == 0:
            raise SchemaError(f'dataset {name!r} is empty')
        for column, values in zip(schema, columns):
            if len(values) != labels.size:
                raise SchemaError(f'column {column.name!r} has {len(values)} rows, expected {labels.size}')

        n_classes = int(labels.max()) + 1 if n_classes is None else n_classes
        if labels.min() < 0 or labels.max() >= n_classes:
            raise SchemaError(f'labels must lie in 0..{n_classes - 1}')
        if np.any(np.bincount(labels, minlength=n_classes) == 0):
            raise SchemaError(f'dataset {name!r} has a class without instances')

        self.name: str = name
        self.schema: tuple[ColumnSchema, ...] = tuple(schema)
        self.columns: tuple[np.ndarray, ...] = tuple(
            np.asarray(values, dtype=np.float64 if column.kind is ColumnKind.numerical else object)
            for column, values in zip(self.schema, columns)
        )
        self.labels: np.ndarray = labels
        self.n_classes: int = n_classes
        self.label_names: tuple[str, ...] = tuple(label_names) if label_names else tuple(map(str, range(n_classes)))

    @property
    def n_rows(self) -> int:
        return int(self.labels.size)

    @property
    def n_numerical(self) -> int:
        return sum(column.kind is ColumnKind.numerical for column in self.schema)

    @property
    def n_categorical(self) -> int:
        return sum(column.kind is ColumnKind.categorical for column in self.schema)

    def row(self, index: int) -> tuple[float | str | None, ...]:
        """One record with missing cells as ``None``."""
        cells = []
        for column, values in zip(self.schema, self.columns):
            value = values[index]
            if column.kind is ColumnKind.numerical:
                cells.append(None if np.isnan(value) else float(value))
            else:
                cells.append(value)
        return tuple(cells)

    def subset(self, indices: Sequence[int]) -> Dataset:
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.name, self.schema,
            [values[indices] for values in self.columns],
            self.labels[indices],
            n_classes=self.n_classes, label_names=self.label_names,
        )

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def __len__(self) -> int:
        return self.n_rows

    def __repr__(self) -> str:
        return (
            f'<Dataset name={self.name!r} N={self.n_rows} r={self.n_numerical} '
            f'c={self.n_categorical} L={self.n_classes}>'
        )


def _read_sidecar(path: Path) -> tuple[dict[str, ColumnSchema], str]:
    with open(path, encoding='utf-8') as f:
        raw = yaml.safe_load(f) or {}
    if 'columns' not in raw or 'label' not in raw:
        raise SchemaError(f'schema sidecar {path} must define "columns" and "label"')
    columns = raw['columns']
    if isinstance(columns, list):  # [{name: ..., kind: ...}, ...]
        columns = {entry['name']: entry for entry in columns}
    schema = {str(name): ColumnSchema.from_dict(str(name), spec) for name, spec in columns.items()}
    return schema, str(raw['label'])


def load_csv(path: str | Path, schema_path: str | Path, *, name: str | None = None) -> Dataset:
    """Load a CSV table described by a YAML schema sidecar.

    Empty cells and ``?`` become missing values. Labels are re-indexed densely
    in first-appearance order.

    Raises
    ------
    SchemaError
        On unknown sidecar columns, non-numeric numerical cells, missing labels
        or an empty table.
    """
    path = Path(path)
    declared, label_column = _read_sidecar(Path(schema_path))
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False, encoding='utf-8')
    header = list(frame.columns)

    unknown = [column for column in [*declared, label_column] if column not in header]
    if unknown:
        raise SchemaError(f'sidecar names columns absent from {path.name}: {unknown}')
    ignored = [column for column in header if column not in declared and column != label_column]
    if ignored:
        logger.warning(f'Ignoring undeclared columns in {path.name}: {ignored}')
    if frame.empty:
        raise SchemaError(f'{path.name} has no data rows')

    schema: list[ColumnSchema] = []
    columns: list[np.ndarray] = []
    for column_name in header:
        column = declared.get(column_name)
        if column is None:
            continue
        cells = [cell.strip() for cell in frame[column_name]]
        if column.kind is ColumnKind.numerical:
            values = np.empty(len(cells))
            for i, cell in enumerate(cells):
                if cell in MISSING_MARKERS:
                    values[i] = np.nan
                    continue
                try:
                    values[i] = float(cell)
                except ValueError:
                    raise SchemaError(
                        f'non-numeric value {cell!r} in numerical column {column_name!r} (row {i + 1})'
                    ) from None
                if not np.isfinite(values[i]):
                    raise SchemaError(f'non-finite value {cell!r} in column {column_name!r} (row {i + 1})')
        else:
            values = np.array([None if cell in MISSING_MARKERS else cell for cell in cells], dtype=object)
        schema.append(column)
        columns.append(values)

    label_index: dict[str, int] = {}
    labels = np.empty(len(frame), dtype=np.int64)
    for i, cell in enumerate(frame[label_column]):
        cell = cell.strip()
        if cell in MISSING_MARKERS:
            raise SchemaError(f'missing label in row {i + 1}')
        labels[i] = label_index.setdefault(cell, len(label_index))

    dataset = Dataset(
        name or path.stem, schema, columns, labels,
        n_classes=len(label_index), label_names=list(label_index),
    )
    logger.info(f'Loaded {dataset!r} from {path}')
    return dataset
