from __future__ import annotations

import logging

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import cho_solve
from scipy.linalg.lapack import dpotrf

from errors import DimensionError, NumericalError

__all__ = ('Matrix', 'as_matrix', 'matmul', 'cholesky_solve')

logger = logging.getLogger(__name__)

Matrix = NDArray[np.float64]


def as_matrix(value, *, name: str = 'matrix') -> Matrix:
    """Coerce ``value`` into a 2-D float64 array, rejecting non-finite entries."""
    out = np.asarray(value, dtype=np.float64)
    if out.ndim == 1:
        out = out.reshape(-1, 1)
    if out.ndim != 2:
        raise DimensionError(f'{name} must be 2-dimensional, got shape {out.shape}')
    if not np.all(np.isfinite(out)):
        raise DimensionError(f'{name} contains non-finite entries')
    return out


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Standard matrix product ``a @ b``.

    Raises
    ------
    DimensionError
        If ``a.cols != b.rows``.
    """
    a = as_matrix(a, name='a')
    b = as_matrix(b, name='b')
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f'cannot multiply {a.shape} by {b.shape}')
    return a @ b


def cholesky_solve(a: Matrix, b: Matrix) -> Matrix:
    """Solve ``a x = b`` for a symmetric positive definite ``a``.

    Parameters
    ----------
    a: Matrix
        Symmetric positive definite ``n x n`` matrix. Only the lower triangle is read.
    b: Matrix
        Right-hand side with ``n`` rows; a 1-D vector is treated as a single column.

    Raises
    ------
    NumericalError
        If the factorization meets a non-positive pivot. ``pivot`` holds its zero-based index.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    vector = b.ndim == 1
    if vector:
        b = b.reshape(-1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f'cholesky_solve needs a square matrix, got {a.shape}')
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f'right-hand side has {b.shape[0]} rows, expected {a.shape[0]}')

    factor, info = dpotrf(a, lower=True, clean=True, overwrite_a=False)
    if info > 0:
        pivot = int(info) - 1
        logger.debug(f'Cholesky factorization failed at pivot {pivot} of {a.shape[0]}')
        raise NumericalError(f'matrix is not positive definite (pivot {pivot} <= 0)', pivot=pivot)
    if info < 0:
        raise NumericalError(f'invalid argument {-info} passed to dpotrf')

    x = cho_solve((factor, True), b, check_finite=False)
    return x.ravel() if vector else x
