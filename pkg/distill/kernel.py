"""Analytic depth-1 ReLU neural tangent kernel and kernel ridge regression."""

from __future__ import annotations

import numpy as np

from errors import ConfigError, DimensionError
from numerics import cholesky_solve
from numerics.autodiff import Tensor, clip, elementwise, lift, maximum, spd_solve, sqrt

__all__ = (
    'ntk',
    'ntk_tensor',
    'encode_targets',
    'decode_predictions',
    'krr_predict',
    'krr_predict_tensor',
    'kip_predict',
)

_TINY = 1e-300


def _arc_cosine_one(c):
    return elementwise(
        c,
        lambda x: np.sqrt(np.maximum(1.0 - x * x, 0.0)) + (np.pi - np.arccos(x)) * x,
        lambda x, _: np.pi - np.arccos(x),
        'arccos1',
    )


def _arc_cosine_zero(c):
    def derivative(x, _):
        gap = 1.0 - x * x
        return np.where(gap < 1e-12, 0.0, 1.0 / np.sqrt(np.where(gap < 1e-12, 1.0, gap)))
    return elementwise(c, lambda x: np.pi - np.arccos(x), derivative, 'arccos0')


def ntk_tensor(a, b) -> Tensor:
    """Differentiable ``ntk`` for graph tensors."""
    a, b = lift(a), lift(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise DimensionError(f'ntk needs 2-D inputs of equal width, got {a.shape} and {b.shape}')
    inv_width = 1.0 / a.shape[1]
    cross = (a @ b.T) * inv_width
    norm_a = sqrt((a * a).sum(axis=1, keepdims=True) * inv_width)
    norm_b = sqrt((b * b).sum(axis=1, keepdims=True) * inv_width)
    outer = norm_a @ norm_b.T
    cosine = clip(cross / maximum(outer, _TINY), -1.0, 1.0)
    return (outer * _arc_cosine_one(cosine) + cross * _arc_cosine_zero(cosine)) * (0.5 / np.pi)


def ntk(X: np.ndarray, X2: np.ndarray | None = None) -> np.ndarray:
    """Infinite-width NTK of ``f(x) = n^-1/2 sum_k v_k relu(w_k . x / sqrt(p))``.

    With ``s = x.x'/p``, norms ``|x|/sqrt(p)`` and ``c`` their cosine,
    ``K = (|x||x'| J1(c) + s (pi - arccos c)) / (2 pi)`` where
    ``J1(c) = sqrt(1 - c^2) + (pi - arccos c) c``. Zero rows give zero kernel
    entries.
    """
    X = np.asarray(X, dtype=np.float64)
    X2 = X if X2 is None else np.asarray(X2, dtype=np.float64)
    return ntk_tensor(X, X2).data.copy()


def encode_targets(y: np.ndarray, n_classes: int) -> np.ndarray:
    """``+-1`` column for two classes, centered one-hot rows otherwise."""
    y = np.asarray(y, dtype=np.int64)
    if n_classes == 2:
        return np.where(y == 1, 1.0, -1.0)[:, None]
    onehot = np.zeros((y.size, n_classes))
    onehot[np.arange(y.size), y] = 1.0
    return onehot - 1.0 / n_classes


def decode_predictions(outputs: np.ndarray, n_classes: int) -> np.ndarray:
    """Sign (zero goes to class 0) or argmax with the lowest class winning ties."""
    outputs = np.asarray(outputs, dtype=np.float64)
    if n_classes == 2:
        return (outputs[:, 0] > 0.0).astype(np.int64)
    return np.argmax(outputs, axis=1).astype(np.int64)


def krr_predict_tensor(support, targets, query, ridge: float) -> Tensor:
    """``K(query, support) (K(support, support) + ridge I)^-1 targets``."""
    support = lift(support)
    gram = ntk_tensor(support, support) + ridge * np.eye(support.shape[0])
    return ntk_tensor(query, support) @ spd_solve(gram, targets)


def krr_predict(support: np.ndarray, targets: np.ndarray, query: np.ndarray, ridge: float) -> np.ndarray:
    if not ridge > 0:
        raise ConfigError(f'ridge must be positive, got {ridge}')
    support = np.asarray(support, dtype=np.float64)
    gram = ntk(support) + ridge * np.eye(support.shape[0])
    return ntk(query, support) @ cholesky_solve(gram, np.asarray(targets, dtype=np.float64))


def kip_predict(
    support: np.ndarray,
    support_labels: np.ndarray,
    query: np.ndarray,
    ridge: float,
    *,
    n_classes: int | None = None,
) -> np.ndarray:
    """Kernel ridge regression class predictions from a labelled support set."""
    support_labels = np.asarray(support_labels, dtype=np.int64)
    n_classes = int(support_labels.max()) + 1 if n_classes is None else n_classes
    outputs = krr_predict(support, encode_targets(support_labels, n_classes), query, ridge)
    return decode_predictions(outputs, n_classes)
