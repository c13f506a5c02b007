from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

__all__ = ('fit_knn', 'predict_knn')


def fit_knn(X: np.ndarray, y: np.ndarray, n_classes: int, *, k: int = 5, p: float = 2) -> dict[str, np.ndarray]:
    return {'points': X.copy(), 'labels': y.copy(), 'k': np.int64(k), 'p': np.float64(p)}


def predict_knn(state: dict[str, np.ndarray], X: np.ndarray, n_classes: int) -> np.ndarray:
    """Majority vote of the ``k`` nearest stored points.

    Equidistant neighbors are taken in storage order; the lowest class wins
    tied votes.
    """
    points, labels = state['points'], state['labels']
    k = min(int(state['k']), points.shape[0])
    distances = cdist(X, points, metric='minkowski', p=float(state['p']))
    nearest = np.argsort(distances, axis=1, kind='stable')[:, :k]
    votes = np.zeros((X.shape[0], n_classes), dtype=np.int64)
    for column in range(k):
        np.add.at(votes, (np.arange(X.shape[0]), labels[nearest[:, column]]), 1)
    return np.argmax(votes, axis=1).astype(np.int64)
