from __future__ import annotations

import numpy as np

__all__ = ('fit_gnb', 'predict_gnb')


def fit_gnb(X: np.ndarray, y: np.ndarray, n_classes: int, *, var_smoothing: float = 1e-9) -> dict[str, np.ndarray]:
    """Per-class means, variances and priors.

    Every variance is raised by ``var_smoothing`` times the largest feature
    variance of ``X`` (by ``var_smoothing`` itself when all features are
    constant). Classes absent from ``y`` get a zero prior.
    """
    spread = float(np.var(X, axis=0).max()) if X.shape[1] else 0.0
    epsilon = var_smoothing * spread if spread > 0.0 else var_smoothing
    means = np.zeros((n_classes, X.shape[1]))
    variances = np.ones((n_classes, X.shape[1]))
    counts = np.bincount(y, minlength=n_classes)
    for label in np.flatnonzero(counts):
        rows = X[y == label]
        means[label] = rows.mean(axis=0)
        variances[label] = rows.var(axis=0) + epsilon
    return {'means': means, 'variances': variances, 'priors': counts / counts.sum()}


def predict_gnb(state: dict[str, np.ndarray], X: np.ndarray, n_classes: int) -> np.ndarray:
    means, variances = state['means'], state['variances']
    with np.errstate(divide='ignore'):
        log_prior = np.log(state['priors'])
    log_norm = -0.5 * np.log(2.0 * np.pi * variances).sum(axis=1)
    joint = np.stack([
        log_prior[label] + log_norm[label] - 0.5 * (((X - means[label]) ** 2) / variances[label]).sum(axis=1)
        for label in range(n_classes)
    ], axis=1)
    return np.argmax(joint, axis=1).astype(np.int64)
