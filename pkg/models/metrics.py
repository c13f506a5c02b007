from __future__ import annotations

import numpy as np

from errors import ContractError, DimensionError

__all__ = ('confusion_matrix', 'balanced_accuracy')


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int | None = None) -> np.ndarray:
    """``counts[i, j]``: rows of true class ``i`` predicted as ``j``."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise DimensionError(f'label vectors differ in shape: {y_true.shape} and {y_pred.shape}')
    if y_true.size == 0:
        raise ContractError('confusion matrix of empty label vectors')
    n_classes = int(max(y_true.max(), y_pred.max())) + 1 if n_classes is None else n_classes
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    return counts


def balanced_accuracy(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Mean per-class recall over the classes present in ``y_true``."""
    counts = confusion_matrix(y_true, y_pred)
    support = counts.sum(axis=1)
    present = support > 0
    return float(np.mean(np.diag(counts)[present] / support[present]))
