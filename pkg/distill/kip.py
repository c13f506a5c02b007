from __future__ import annotations

import logging

import numpy as np

from errors import TrainingError
from numerics import Graph, OptimizerState, Rng, Tensor, backward, step
from .base import DistilledSet, KipConfig, SetSpace
from .kernel import encode_targets, krr_predict_tensor
from .sampling import distill_random

__all__ = ('kip_loss', 'distill_kip')

logger = logging.getLogger(__name__)


def kip_loss(support, support_targets, X: np.ndarray, targets: np.ndarray, ridge: float) -> Tensor:
    """Mean squared error between ``targets`` and the kernel ridge predictions for ``X``."""
    residual = krr_predict_tensor(support, support_targets, X, ridge) - targets
    return (residual * residual).mean()


def distill_kip(
    X: np.ndarray,
    y: np.ndarray,
    ipc: int,
    cfg: KipConfig | None = None,
    seed: int = 0,
    *,
    n_classes: int | None = None,
    space: SetSpace | str = SetSpace.original,
) -> DistilledSet:
    """Learn support points whose kernel ridge predictions fit the training labels.

    The support set starts as a per-class random sample and its labels stay
    fixed, so class balance is exact. With ``cfg.learn_labels`` the regression
    targets are optimized too and stored on the result.

    Raises
    ------
    TrainingError
        If the loss becomes NaN; ``step`` holds the failing step.
    """
    cfg = (cfg or KipConfig()).validate()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n_classes = int(y.max()) + 1 if n_classes is None else n_classes

    init = distill_random(X, y, ipc, seed, n_classes=n_classes)
    targets = encode_targets(y, n_classes)
    params = {'support': init.features.copy(), 'targets': encode_targets(init.labels, n_classes)}
    ridge = cfg.ridge_for(init.size)
    opt = OptimizerState.adam(cfg.learning_rate)
    rng = Rng(seed).child('kip')
    logger.info(f'KIP on {y.size} rows: n={init.size} ridge={ridge:.3g} epochs={cfg.epochs}')

    def full_loss() -> float:
        return kip_loss(params['support'], params['targets'], X, targets, ridge).item()

    trace = [full_loss()]
    for index in range(1, cfg.epochs + 1):
        rows = np.arange(y.size) if cfg.batch_size is None or cfg.batch_size >= y.size \
            else np.sort(rng.child('batch', index).choice(y.size, cfg.batch_size))
        graph = Graph()
        support = graph.param('support', params['support'])
        support_targets = graph.param('targets', params['targets']) if cfg.learn_labels else params['targets']
        loss = kip_loss(support, support_targets, X[rows], targets[rows], ridge)
        if not np.isfinite(loss.item()):
            raise TrainingError(f'KIP loss diverged at step {index}', step=index)
        params = step(opt, params, backward(graph, loss))

        trace.append(full_loss())
        if not np.isfinite(trace[-1]):
            raise TrainingError(f'KIP loss diverged at step {index}', step=index)

    logger.info(f'KIP loss {trace[0]:.5g} -> {trace[-1]:.5g}')
    return DistilledSet(
        params['support'], init.labels, space,
        method='kip', seed=seed,
        traces={'loss': trace},
        targets=params['targets'] if cfg.learn_labels else None,
        n_classes=n_classes,
    )
