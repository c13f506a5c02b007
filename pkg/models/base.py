from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping, TYPE_CHECKING

import numpy as np

from errors import ConfigError, ContractError, DimensionError
from .gnb import fit_gnb, predict_gnb
from .knn import fit_knn, predict_knn
from .logreg import fit_logreg, predict_logreg
from .mlp import fit_mlp, predict_mlp

if TYPE_CHECKING:
    from typing import Self

__all__ = ('ClassifierKind', 'ClassifierSpec', 'TrainedModel', 'fit', 'predict')

logger = logging.getLogger(__name__)


class ClassifierKind(Enum):
    knn = 'knn'
    logreg = 'logreg'
    gnb = 'gnb'
    mlp = 'mlp'

    @property
    def defaults(self) -> dict[str, Any]:
        return {
            ClassifierKind.knn: {'k': 5, 'p': 2},
            ClassifierKind.logreg: {'C': 1.0, 'tol': 1e-4, 'max_iter': 10_000},
            ClassifierKind.gnb: {'var_smoothing': 1e-9},
            ClassifierKind.mlp: {
                'hidden': 100, 'learning_rate': 1e-4, 'batch_size': 200, 'max_epochs': 200,
                'alpha': 1e-4, 'validation_fraction': 0.1, 'patience': 10, 'init': 'glorot',
            },
        }[self]


_FITTERS: dict[ClassifierKind, Callable[..., dict[str, np.ndarray]]] = {
    ClassifierKind.knn: fit_knn,
    ClassifierKind.logreg: fit_logreg,
    ClassifierKind.gnb: fit_gnb,
    ClassifierKind.mlp: fit_mlp,
}

_PREDICTORS: dict[ClassifierKind, Callable[[dict, np.ndarray, int], np.ndarray]] = {
    ClassifierKind.knn: predict_knn,
    ClassifierKind.logreg: predict_logreg,
    ClassifierKind.gnb: predict_gnb,
    ClassifierKind.mlp: predict_mlp,
}


@dataclass(frozen=True, slots=True)
class ClassifierSpec:
    """A downstream classifier kind with hyperparameter overrides."""

    kind: ClassifierKind
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, 'kind', ClassifierKind(self.kind))
        unknown = sorted(set(self.params) - set(self.kind.defaults))
        if unknown:
            raise ConfigError(f'unknown {self.kind.value} hyperparameters: {unknown}')

    @property
    def hyperparameters(self) -> dict[str, Any]:
        return {**self.kind.defaults, **self.params}

    @property
    def name(self) -> str:
        return self.kind.value

    @classmethod
    def from_dict(cls, raw: str | Mapping[str, Any]) -> Self:
        if isinstance(raw, str):
            return cls(ClassifierKind(raw))
        return cls(ClassifierKind(raw['kind']), dict(raw.get('params') or {}))


class TrainedModel:
    """A fitted classifier.

    ``state`` holds the kind-specific fitted arrays; a model trained on a
    single class holds only ``constant``.
    """

    __slots__ = ('kind', 'state', 'width', 'n_classes')

    def __init__(self, kind: ClassifierKind, state: dict[str, np.ndarray], width: int, n_classes: int) -> None:
        self.kind: ClassifierKind = kind
        self.state: dict[str, np.ndarray] = state
        self.width: int = width
        self.n_classes: int = n_classes

    @property
    def is_degenerate(self) -> bool:
        return 'constant' in self.state

    def __repr__(self) -> str:
        return f'<TrainedModel kind={self.kind.value} width={self.width} L={self.n_classes}>'


def fit(spec: ClassifierSpec, X: np.ndarray, y: np.ndarray, seed: int = 0, *, n_classes: int | None = None) -> TrainedModel:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if y.ndim != 1 or y.size != X.shape[0] or y.size == 0:
        raise DimensionError(f'need one label per row, got {y.size} labels for {X.shape[0]} rows')
    n_classes = int(y.max()) + 1 if n_classes is None else n_classes

    present = np.unique(y)
    if present.size == 1:
        logger.warning(f'{spec.name} trained on a single class ({present[0]}); predicting it everywhere')
        return TrainedModel(spec.kind, {'constant': np.int64(present[0])}, X.shape[1], n_classes)

    hyperparameters = spec.hyperparameters
    if spec.kind is ClassifierKind.mlp:
        hyperparameters['seed'] = seed
    state = _FITTERS[spec.kind](X, y, n_classes, **hyperparameters)
    return TrainedModel(spec.kind, state, X.shape[1], n_classes)


def predict(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.width:
        raise DimensionError(f'{model!r} expects {model.width} features, got {X.shape[1]}')
    if model.is_degenerate:
        return np.full(X.shape[0], int(model.state['constant']), dtype=np.int64)
    if not np.all(np.isfinite(X)):
        raise ContractError('prediction inputs must be finite')
    return _PREDICTORS[model.kind](model.state, X, model.n_classes)
