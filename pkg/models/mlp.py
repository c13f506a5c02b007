from __future__ import annotations

import logging

import numpy as np

from errors import ConfigError
from numerics import Graph, OptimizerState, Rng, backward, step
from numerics.autodiff import log_softmax, relu

__all__ = ('fit_mlp', 'predict_mlp')

logger = logging.getLogger(__name__)


def _logits(params, X):
    hidden = relu(X @ params['hidden.weight'] + params['hidden.bias'])
    return hidden @ params['output.weight'] + params['output.bias']


def _mean_ce(params, X: np.ndarray, y: np.ndarray):
    log_probs = log_softmax(_logits(params, X), axis=-1)
    picks = np.zeros(log_probs.shape)
    picks[np.arange(y.size), y] = -1.0 / y.size
    return (log_probs * picks).sum()


def _init(width: int, hidden: int, n_classes: int, init: str, rng: Rng) -> dict[str, np.ndarray]:
    if init == 'zeros':
        return {
            'hidden.weight': np.zeros((width, hidden)), 'hidden.bias': np.zeros(hidden),
            'output.weight': np.zeros((hidden, n_classes)), 'output.bias': np.zeros(n_classes),
        }
    if init != 'glorot':
        raise ConfigError(f'unknown mlp init {init!r}')
    params = {}
    for name, fan_in, fan_out in (('hidden', width, hidden), ('output', hidden, n_classes)):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        layer = rng.child(name)
        params[f'{name}.weight'] = layer.uniform(-bound, bound, (fan_in, fan_out))
        params[f'{name}.bias'] = layer.uniform(-bound, bound, fan_out)
    return params


def fit_mlp(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    *,
    seed: int = 0,
    hidden: int = 100,
    learning_rate: float = 1e-4,
    batch_size: int = 200,
    max_epochs: int = 200,
    alpha: float = 1e-4,
    validation_fraction: float = 0.1,
    patience: int = 10,
    init: str = 'glorot',
) -> dict[str, np.ndarray]:
    """One-hidden-layer ReLU network trained with Adam on softmax cross-entropy.

    The last ``validation_fraction`` of a seeded shuffle is held out; training
    stops once its loss has not improved for ``patience`` epochs and the best
    snapshot is kept. ``alpha`` is the L2 penalty on weight matrices.
    """
    rng = Rng(seed).child('mlp')
    params = _init(X.shape[1], hidden, n_classes, init, rng.child('init'))
    order = rng.child('holdout').permutation(y.size)
    held = int(np.floor(y.size * validation_fraction))
    fit_rows, val_rows = order[:y.size - held], order[y.size - held:]
    if fit_rows.size == 0:
        fit_rows, val_rows = order, order[:0]
    opt = OptimizerState.adam(learning_rate)
    batch = max(1, min(batch_size, fit_rows.size))

    def monitored() -> float:
        rows = val_rows if val_rows.size else fit_rows
        return _mean_ce(params, X[rows], y[rows]).item()

    best_loss, best_params, waited = monitored(), params, 0
    for epoch in range(1, max_epochs + 1):
        shuffled = fit_rows[rng.child('epoch', epoch).permutation(fit_rows.size)]
        for start in range(0, shuffled.size, batch):
            rows = shuffled[start:start + batch]
            graph = Graph()
            loss = _mean_ce(graph.parameters(params), X[rows], y[rows])
            grads = backward(graph, loss)
            for name in ('hidden.weight', 'output.weight'):
                grads[name] = grads[name] + alpha * params[name] / rows.size
            params = step(opt, params, grads)

        current = monitored()
        if current < best_loss:
            best_loss, best_params, waited = current, params, 0
        else:
            waited += 1
            if waited >= patience:
                logger.debug(f'mlp early stop at epoch {epoch}')
                break
    return best_params


def predict_mlp(state: dict[str, np.ndarray], X: np.ndarray, n_classes: int) -> np.ndarray:
    return np.argmax(_logits(state, X).data, axis=1).astype(np.int64)
