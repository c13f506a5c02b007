"""Mini-batch Adam training of autoencoders with early stopping."""

from __future__ import annotations

import logging
import time
from typing import Callable, NamedTuple

import numpy as np

from errors import ConfigError, ContractError, TrainingError
from numerics import Graph, OptimizerState, Rng, Tensor, backward, step
from .autoencoder import Autoencoder, attach_head
from .configs import TrainConfig
from .encoders import decoder_logits, forward_latent, head_logits
from .losses import cross_entropy_tensor, recon_loss_tensor

__all__ = ('TrainHistory', 'train_unsupervised', 'fine_tune_supervised')

logger = logging.getLogger(__name__)

# (params, binary rows, labels or None, dropout rng or None) -> scalar loss
Objective = Callable[[dict, np.ndarray, 'np.ndarray | None', 'Rng | None'], Tensor]


class TrainHistory(NamedTuple):
    """Per-epoch full-set losses; index 0 holds the losses before any update."""

    train_loss: tuple[float, ...]
    val_loss: tuple[float, ...]
    best_epoch: int
    stopped_early: bool
    seconds: float

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss) - 1

    @property
    def best_val_loss(self) -> float:
        return self.val_loss[self.best_epoch]

    def __repr__(self) -> str:
        return (
            f'<TrainHistory epochs={self.epochs_run} best_epoch={self.best_epoch} '
            f'train={self.train_loss[-1]:.4f} val={self.best_val_loss:.4f}>'
        )


def _holdout(rows: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    order = Rng(seed).child('holdout').permutation(rows)
    size = min(max(1, int(round(rows * fraction))), rows - 1) if rows > 1 else 0
    return np.sort(order[:rows - size]), np.sort(order[rows - size:])


def _fit(
    ae: Autoencoder,
    objective: Objective,
    train: tuple[np.ndarray, np.ndarray | None],
    val: tuple[np.ndarray, np.ndarray | None],
    cfg: TrainConfig,
    stage: str,
) -> tuple[Autoencoder, TrainHistory]:
    started = time.perf_counter()
    train_b, train_y = train
    val_b, val_y = val
    monitor_val = val_b.shape[0] > 0
    rng = Rng(cfg.seed).child('train', stage)
    opt = OptimizerState.adam(cfg.learning_rate)
    params = {name: value.copy() for name, value in ae.params.items()}

    def evaluate(b: np.ndarray, y: np.ndarray | None) -> float:
        return objective(params, b, y, None).item() if b.shape[0] else float('nan')

    train_curve = [evaluate(train_b, train_y)]
    val_curve = [evaluate(val_b, val_y) if monitor_val else train_curve[0]]
    best_epoch, best_params, waited = 0, params, 0
    stopped_early = False
    rows = train_b.shape[0]

    for epoch in range(1, cfg.epochs + 1):
        order = rng.child('epoch', epoch).permutation(rows)
        for batch_index, start in enumerate(range(0, rows, cfg.batch_size)):
            batch = order[start:start + cfg.batch_size]
            graph = Graph()
            loss = objective(
                graph.parameters(params), train_b[batch],
                None if train_y is None else train_y[batch],
                rng.child('dropout', epoch, batch_index),
            )
            grads = backward(graph, loss)
            if cfg.weight_decay:
                grads = {name: grad + cfg.weight_decay * params[name] for name, grad in grads.items()}
            params = step(opt, params, grads)

        train_curve.append(evaluate(train_b, train_y))
        val_curve.append(evaluate(val_b, val_y) if monitor_val else train_curve[-1])
        if not (np.isfinite(train_curve[-1]) and np.isfinite(val_curve[-1])):
            raise TrainingError(f'{stage} loss diverged at epoch {epoch}', epoch=epoch)
        logger.debug(f'{stage} epoch {epoch}: train={train_curve[-1]:.5f} val={val_curve[-1]:.5f}')

        if val_curve[-1] < val_curve[best_epoch]:
            best_epoch, best_params, waited = epoch, params, 0
        else:
            waited += 1
            if waited >= cfg.patience:
                stopped_early = True
                logger.info(f'{stage} stopped early at epoch {epoch}; best epoch {best_epoch}')
                break

    history = TrainHistory(
        train_loss=tuple(train_curve),
        val_loss=tuple(val_curve),
        best_epoch=best_epoch,
        stopped_early=stopped_early,
        seconds=time.perf_counter() - started,
    )
    return ae.with_params(best_params), history


def _validation(
    train_b: np.ndarray,
    train_y: np.ndarray | None,
    val_b: np.ndarray | None,
    val_y: np.ndarray | None,
    cfg: TrainConfig,
):
    if val_b is not None:
        return (train_b, train_y), (np.asarray(val_b, dtype=np.float64), val_y)
    fit_rows, held_rows = _holdout(train_b.shape[0], cfg.val_fraction, cfg.seed)
    pick = lambda y, rows: None if y is None else y[rows]
    return (train_b[fit_rows], pick(train_y, fit_rows)), (train_b[held_rows], pick(train_y, held_rows))


def train_unsupervised(
    ae: Autoencoder,
    train_b: np.ndarray,
    val_b: np.ndarray | None = None,
    cfg: TrainConfig | None = None,
) -> tuple[Autoencoder, TrainHistory]:
    """Minimize the mean reconstruction loss, keeping the best-validation snapshot.

    Parameters
    ----------
    ae: Autoencoder
        Initialized autoencoder; it is not modified.
    train_b: np.ndarray
        Binary training rows.
    val_b: np.ndarray | None
        Binary validation rows. When ``None`` a ``cfg.val_fraction`` slice of
        the training rows is held out.
    cfg: TrainConfig
        Optimization settings.

    Raises
    ------
    TrainingError
        If the loss becomes NaN; ``epoch`` holds the failing epoch.
    """
    cfg = (cfg or TrainConfig()).validate()
    train_b = np.asarray(train_b, dtype=np.float64)
    h = ae.homogenizer

    def objective(params, b, _labels, rng):
        z = forward_latent(ae.cfg, h, params, b, rng=rng)
        return recon_loss_tensor(decoder_logits(ae.cfg, params, z), b, h)

    train, val = _validation(train_b, None, val_b, None, cfg)
    logger.info(f'Training {ae!r} on {train[0].shape[0]} rows for up to {cfg.epochs} epochs')
    trained, history = _fit(ae, objective, train, val, cfg, 'reconstruction')
    logger.info(f'Finished reconstruction training: {history!r}')
    return trained, history


def fine_tune_supervised(
    ae: Autoencoder,
    train_b: np.ndarray,
    train_y: np.ndarray,
    val_b: np.ndarray | None = None,
    val_y: np.ndarray | None = None,
    cfg: TrainConfig | None = None,
    alpha: float | None = None,
    *,
    n_classes: int | None = None,
) -> tuple[Autoencoder, TrainHistory]:
    """Attach a classifier head and minimize ``recon + alpha * CE`` jointly.

    ``alpha`` defaults to ``cfg.alpha``; zero is accepted and reduces the
    objective to pure reconstruction. Early stopping monitors the combined
    validation loss.
    """
    cfg = cfg or TrainConfig()
    alpha = cfg.alpha if alpha is None else float(alpha)
    if alpha < 0:
        raise ConfigError(f'alpha must be >= 0, got {alpha}')
    cfg.validate()

    train_b = np.asarray(train_b, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.int64)
    if train_y.shape != (train_b.shape[0],):
        raise ContractError(f'expected {train_b.shape[0]} labels, got shape {train_y.shape}')
    if val_b is not None and val_y is None:
        raise ContractError('validation rows need validation labels')
    n_classes = int(train_y.max()) + 1 if n_classes is None else n_classes
    val_y = None if val_y is None else np.asarray(val_y, dtype=np.int64)

    tuned = attach_head(ae, n_classes, cfg.seed)
    h = ae.homogenizer

    def objective(params, b, labels, rng):
        z = forward_latent(ae.cfg, h, params, b, rng=rng)
        recon = recon_loss_tensor(decoder_logits(ae.cfg, params, z), b, h)
        return recon + alpha * cross_entropy_tensor(head_logits(params, z), labels)

    train, val = _validation(train_b, train_y, val_b, val_y, cfg)
    logger.info(f'Fine-tuning {tuned!r} with alpha={alpha} on {train[0].shape[0]} rows')
    trained, history = _fit(tuned, objective, train, val, cfg, 'fine-tune')
    logger.info(f'Finished supervised fine-tuning: {history!r}')
    return trained, history
