"""L2-regularized logistic regression solved by accelerated gradient descent.

The objective is the mean log-loss plus ``||w||^2 / (2C)``; intercepts are not
penalized. Duplicating every training row leaves the optimum unchanged.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.special import expit, log_expit, log_softmax, softmax

__all__ = ('fit_logreg', 'predict_logreg', 'logreg_objective')

logger = logging.getLogger(__name__)


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _targets(y: np.ndarray, n_classes: int) -> np.ndarray:
    if n_classes == 2:
        return y.astype(np.float64)[:, None]
    onehot = np.zeros((y.size, n_classes))
    onehot[np.arange(y.size), y] = 1.0
    return onehot


def _penalty_mask(shape: tuple[int, int]) -> np.ndarray:
    mask = np.ones(shape)
    mask[-1, :] = 0.0  # intercept row
    return mask


def logreg_objective(coef: np.ndarray, X: np.ndarray, targets: np.ndarray, C: float) -> tuple[float, np.ndarray]:
    """Objective value and gradient for ``coef`` of shape ``(p + 1, outputs)``."""
    Xa = _augment(X)
    scores = Xa @ coef
    n = X.shape[0]
    mask = _penalty_mask(coef.shape)
    if targets.shape[1] == 1:
        loss = -np.mean(targets * log_expit(scores) + (1.0 - targets) * log_expit(-scores))
        residual = expit(scores) - targets
    else:
        loss = -np.mean((targets * log_softmax(scores, axis=1)).sum(axis=1))
        residual = softmax(scores, axis=1) - targets
    value = loss + 0.5 * float(((coef * mask) ** 2).sum()) / C
    grad = Xa.T @ residual / n + coef * mask / C
    return float(value), grad


def fit_logreg(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    *,
    C: float = 1.0,
    tol: float = 1e-4,
    max_iter: int = 10_000,
) -> dict[str, np.ndarray]:
    """Nesterov-accelerated gradient descent with step ``1/L`` until ``max|grad| <= tol``."""
    targets = _targets(y, n_classes)
    outputs = targets.shape[1]
    Xa = _augment(X)
    curvature = 0.25 if outputs == 1 else 0.5
    lipschitz = curvature * np.linalg.norm(Xa, 2) ** 2 / X.shape[0] + 1.0 / C
    step = 1.0 / lipschitz

    coef = np.zeros((Xa.shape[1], outputs))
    previous = coef
    momentum = 1.0
    value, grad = logreg_objective(coef, X, targets, C)
    converged = False
    for iteration in range(max_iter):
        if np.max(np.abs(grad)) <= tol:
            converged = True
            break
        next_momentum = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum * momentum))
        lookahead = coef + ((momentum - 1.0) / next_momentum) * (coef - previous)
        _, look_grad = logreg_objective(lookahead, X, targets, C)
        candidate = lookahead - step * look_grad
        candidate_value, candidate_grad = logreg_objective(candidate, X, targets, C)
        if candidate_value > value:  # restart the momentum sequence
            momentum = 1.0
            previous = coef
            candidate = coef - step * grad
            candidate_value, candidate_grad = logreg_objective(candidate, X, targets, C)
        else:
            momentum = next_momentum
            previous = coef
        coef, value, grad = candidate, candidate_value, candidate_grad

    if not converged:
        logger.warning(f'logistic regression stopped after {max_iter} iterations (max |grad| {np.max(np.abs(grad)):.2e})')
    return {'coef': coef}


def predict_logreg(state: dict[str, np.ndarray], X: np.ndarray, n_classes: int) -> np.ndarray:
    scores = _augment(X) @ state['coef']
    if scores.shape[1] == 1:
        return (scores[:, 0] > 0.0).astype(np.int64)
    return np.argmax(scores, axis=1).astype(np.int64)
