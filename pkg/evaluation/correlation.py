from __future__ import annotations

import numpy as np

from errors import ContractError, DimensionError

__all__ = ('feature_correlation', 'zero_variance_columns', 'correlation_gap')


def zero_variance_columns(X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return np.flatnonzero(np.ptp(X, axis=0) == 0.0)


def feature_correlation(X: np.ndarray) -> np.ndarray:
    """Pearson correlation between the columns of ``X``.

    Constant columns correlate 0 with every other column; the diagonal is
    always 1.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] < 2:
        raise ContractError(f'correlation needs at least 2 rows, got {X.shape[0]}')

    centered = X - X.mean(axis=0)
    scale = np.sqrt(np.einsum('ij,ij->j', centered, centered))
    scale[zero_variance_columns(X)] = 0.0
    unit = np.divide(centered, scale, out=np.zeros_like(centered), where=scale > 0.0)
    corr = np.clip(unit.T @ unit, -1.0, 1.0)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return corr


def correlation_gap(reference: np.ndarray, other: np.ndarray) -> float:
    """Mean absolute off-diagonal difference between two correlation matrices."""
    reference, other = np.asarray(reference), np.asarray(other)
    if reference.shape != other.shape or reference.ndim != 2 or reference.shape[0] != reference.shape[1]:
        raise DimensionError(f'cannot compare correlation matrices of shapes {reference.shape} and {other.shape}')
    width = reference.shape[0]
    if width < 2:
        return 0.0
    off = ~np.eye(width, dtype=bool)
    return float(np.abs(reference - other)[off].mean())
