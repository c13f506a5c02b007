from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, TYPE_CHECKING

import numpy as np

from errors import ConfigError, ContractError, DimensionError
from numerics import pack_array, read_document, unpack_array, write_document

if TYPE_CHECKING:
    from typing import Self

__all__ = (
    'DistillMethod',
    'DistillSpace',
    'SetSpace',
    'OutputKind',
    'KipConfig',
    'GmConfig',
    'DistillConfig',
    'DistilledSet',
    'class_members',
    'per_class_sizes',
)

logger = logging.getLogger(__name__)

DISTILLED_FORMAT = 'tdcoler-distilled-set'
DISTILLED_VERSION = 1


class DistillMethod(Enum):
    random = 'random'
    kmeans = 'kmeans'
    agglomerative = 'agglomerative'
    kip = 'kip'
    gm = 'gm'

    @property
    def selects_real_points(self) -> bool:
        """Whether a closest-real variant exists for this method."""
        return self in (DistillMethod.random, DistillMethod.kmeans, DistillMethod.agglomerative)


class DistillSpace(Enum):
    """Where the distiller runs."""
    original = 'original'
    latent = 'latent'


class SetSpace(Enum):
    """Where a distilled set's features live."""
    original = 'original'
    latent = 'latent'
    decoded = 'decoded'


class OutputKind(Enum):
    as_is = 'as-is'
    closest_real = 'closest-real'


def _checked(cls, raw: Mapping[str, Any]) -> dict[str, Any]:
    names = {item.name for item in fields(cls)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(f'unknown {cls.__name__} keys: {unknown}')
    return dict(raw)


@dataclass(frozen=True, slots=True)
class KipConfig:
    """Kernel inducing points settings.

    ``ridge`` of ``None`` means ``ridge_scale * n`` with ``n`` the distilled
    set size. ``width`` documents the finite network the analytic kernel
    stands in for; it does not enter the computation.
    """

    epochs: int = 1000
    width: int = 1024
    ridge: float | None = None
    ridge_scale: float = 1e-6
    learn_labels: bool = False
    learning_rate: float = 0.01
    batch_size: int | None = None  # target rows per step, None for all

    def ridge_for(self, n: int) -> float:
        return self.ridge if self.ridge is not None else self.ridge_scale * n

    def validate(self) -> KipConfig:
        if self.epochs < 1:
            raise ConfigError(f'kip epochs must be >= 1, got {self.epochs}')
        if self.ridge is not None and not self.ridge > 0:
            raise ConfigError(f'kip ridge must be positive, got {self.ridge}')
        if not self.ridge_scale > 0 or not self.learning_rate > 0:
            raise ConfigError('kip ridge_scale and learning_rate must be positive')
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f'kip batch size must be >= 1, got {self.batch_size}')
        return self

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> Self:
        return cls(**_checked(cls, raw)).validate()


@dataclass(frozen=True, slots=True)
class GmConfig:
    """Gradient matching settings; the backbone is an MLP of ``depth`` hidden layers."""

    epochs: int = 500
    hidden_width: int = 1024
    depth: int = 2
    lr_mlp: float = 0.01
    lr_data: float = 0.1
    momentum_data: float = 0.5
    inner_steps: int = 10
    batch_size: int | None = None  # real rows per inner step, None for all

    def validate(self) -> GmConfig:
        positive = {
            'epochs': self.epochs, 'hidden_width': self.hidden_width, 'depth': self.depth,
            'lr_mlp': self.lr_mlp, 'lr_data': self.lr_data, 'momentum_data': self.momentum_data,
            'inner_steps': self.inner_steps,
        }
        bad = [name for name, value in positive.items() if not value > 0]
        if bad:
            raise ConfigError(f'gm settings must be positive: {bad}')
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f'gm batch size must be >= 1, got {self.batch_size}')
        return self

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> Self:
        return cls(**_checked(cls, raw)).validate()


@dataclass(frozen=True, slots=True)
class DistillConfig:
    method: DistillMethod
    ipc: int = 10
    space: DistillSpace = DistillSpace.original
    output: OutputKind = OutputKind.as_is
    seed: int = 0
    restarts: int = 5
    max_iter: int = 300
    kip: KipConfig = field(default_factory=KipConfig)
    gm: GmConfig = field(default_factory=GmConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, 'method', DistillMethod(self.method))
        object.__setattr__(self, 'space', DistillSpace(self.space))
        object.__setattr__(self, 'output', OutputKind(self.output))

    def validate(self) -> DistillConfig:
        if self.ipc < 1:
            raise ConfigError(f'ipc must be >= 1, got {self.ipc}')
        if self.output is OutputKind.closest_real and not self.method.selects_real_points:
            raise ConfigError(f'closest-real output is not defined for {self.method.value}')
        if self.restarts < 1 or self.max_iter < 1:
            raise ConfigError('restarts and max_iter must be >= 1')
        self.kip.validate()
        self.gm.validate()
        return self

    @property
    def tag(self) -> str:
        suffix = '-real' if self.output is OutputKind.closest_real and self.method is not DistillMethod.random else ''
        return f'{self.method.value}{suffix}'

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> Self:
        raw = _checked(cls, raw)
        raw['kip'] = KipConfig.from_dict(raw.get('kip') or {})
        raw['gm'] = GmConfig.from_dict(raw.get('gm') or {})
        return cls(**raw).validate()

    def to_dict(self) -> dict[str, Any]:
        return {
            'method': self.method.value,
            'ipc': self.ipc,
            'space': self.space.value,
            'output': self.output.value,
            'seed': self.seed,
            'restarts': self.restarts,
            'max_iter': self.max_iter,
            'kip': asdict(self.kip),
            'gm': asdict(self.gm),
        }


class DistilledSet:
    """Distilled or selected instances with labels and provenance.

    Parameters
    ----------
    features: np.ndarray
        ``n x width`` feature matrix.
    labels: np.ndarray
        ``n`` integer labels.
    space: SetSpace
        Space the features live in.
    method: str
        Producing method tag.
    seed: int
        Seed of the producing run.
    source_indices: np.ndarray | None
        Row indices into the distiller's input for real-point outputs.
    traces: Mapping[str, Sequence[float]]
        Optimization traces (SSE, merge heights, loss curves) keyed by name.
    targets: np.ndarray | None
        Learned regression targets when KIP learns labels.
    """

    __slots__ = ('features', 'labels', 'space', 'method', 'seed', 'source_indices', 'traces', 'targets', 'n_classes')

    def __init__(
        self,
        features: np.ndarray,
        labels: np.ndarray,
        space: SetSpace | str,
        *,
        method: str,
        seed: int = 0,
        source_indices: np.ndarray | None = None,
        traces: Mapping[str, Any] | None = None,
        targets: np.ndarray | None = None,
        n_classes: int | None = None,
    ) -> None:
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if features.ndim != 2 or features.shape[0] != labels.size:
            raise DimensionError(f'{labels.size} labels do not match features of shape {features.shape}')
        if source_indices is not None:
            source_indices = np.asarray(source_indices, dtype=np.int64)
            if source_indices.shape != labels.shape:
                raise DimensionError('source indices must align with labels')
        self.features: np.ndarray = features
        self.labels: np.ndarray = labels
        self.space: SetSpace = SetSpace(space)
        self.method: str = method
        self.seed: int = int(seed)
        self.source_indices: np.ndarray | None = source_indices
        self.traces: dict[str, tuple[float, ...]] = {
            name: tuple(float(value) for value in values) for name, values in (traces or {}).items()
        }
        self.targets: np.ndarray | None = None if targets is None else np.asarray(targets, dtype=np.float64)
        self.n_classes: int = int(labels.max()) + 1 if n_classes is None else n_classes

    @property
    def size(self) -> int:
        return int(self.labels.size)

    @property
    def width(self) -> int:
        return int(self.features.shape[1])

    @property
    def is_real(self) -> bool:
        return self.source_indices is not None

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def save(self, path: str | Path) -> Path:
        return write_document(path, DISTILLED_FORMAT, DISTILLED_VERSION, {
            'space': self.space.value,
            'method': self.method,
            'seed': self.seed,
            'n_classes': self.n_classes,
            'features': pack_array(self.features),
            'labels': pack_array(self.labels),
            'source_indices': None if self.source_indices is None else pack_array(self.source_indices),
            'targets': None if self.targets is None else pack_array(self.targets),
            'traces': {name: list(values) for name, values in sorted(self.traces.items())},
        })

    @classmethod
    def load(cls, path: str | Path) -> Self:
        raw = read_document(path, DISTILLED_FORMAT, (DISTILLED_VERSION,))
        optional = lambda value: None if value is None else unpack_array(value)
        return cls(
            unpack_array(raw['features']),
            unpack_array(raw['labels']),
            raw['space'],
            method=raw['method'],
            seed=raw['seed'],
            source_indices=optional(raw['source_indices']),
            traces=raw['traces'],
            targets=optional(raw['targets']),
            n_classes=raw['n_classes'],
        )

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return (
            f'<DistilledSet method={self.method} space={self.space.value} n={self.size} '
            f'width={self.width} real={self.is_real}>'
        )


def class_members(y: np.ndarray, n_classes: int | None = None) -> list[np.ndarray]:
    """Ascending row indices of each class."""
    y = np.asarray(y, dtype=np.int64)
    if y.ndim != 1 or y.size == 0:
        raise ContractError('labels must be a non-empty vector')
    n_classes = int(y.max()) + 1 if n_classes is None else n_classes
    return [np.flatnonzero(y == label) for label in range(n_classes)]


def per_class_sizes(members: list[np.ndarray], ipc: int, method: str) -> list[int]:
    """``min(ipc, class size)`` per class, warning on truncation."""
    if ipc < 1:
        raise ConfigError(f'ipc must be >= 1, got {ipc}')
    sizes = []
    for label, rows in enumerate(members):
        if rows.size < ipc:
            logger.warning(f'{method}: class {label} has {rows.size} rows, fewer than ipc={ipc}; truncating')
        sizes.append(min(ipc, rows.size))
    return sizes
