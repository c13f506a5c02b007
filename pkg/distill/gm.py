"""Gradient matching against a ReLU MLP backbone.

Backbone gradients are built as explicit graph operations so the matching
distance can be differentiated with respect to the distilled features. ReLU
masks enter as constants, which is exact wherever the activations are
differentiable.
"""

from __future__ import annotations

import logging
from typing import Mapping

import numpy as np

from errors import ContractError, TrainingError
from numerics import Graph, OptimizerState, Rng, Tensor, backward, step
from numerics.autodiff import lift, softmax, sqrt
from .base import DistilledSet, GmConfig, SetSpace
from .sampling import distill_random

__all__ = (
    'init_backbone',
    'backbone_gradients',
    'gradient_distance',
    'gradient_distance_tensor',
    'distill_gm',
)

logger = logging.getLogger(__name__)


def init_backbone(width: int, n_classes: int, cfg: GmConfig, rng: Rng) -> dict[str, np.ndarray]:
    """Fan-in uniform draw of ``theta_0``."""
    params: dict[str, np.ndarray] = {}
    sizes = [width, *([cfg.hidden_width] * cfg.depth), n_classes]
    for layer, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = 1.0 / np.sqrt(fan_in)
        layer_rng = rng.child('layer', layer)
        params[f'gm.{layer}.weight'] = layer_rng.uniform(-bound, bound, (fan_in, fan_out))
        params[f'gm.{layer}.bias'] = layer_rng.uniform(-bound, bound, fan_out)
    return params


def backbone_gradients(theta: Mapping[str, np.ndarray], X, onehot: np.ndarray) -> dict[str, Tensor]:
    """Gradient of the mean softmax cross-entropy with respect to every backbone tensor.

    ``X`` may be a graph tensor; the returned gradients are then differentiable
    with respect to it.
    """
    X = lift(X)
    layers = len(theta) // 2
    inputs, masks = [X], []
    h = X
    for layer in range(layers):
        pre = h @ theta[f'gm.{layer}.weight'] + theta[f'gm.{layer}.bias']
        if layer < layers - 1:
            mask = (pre.data > 0.0).astype(np.float64)
            masks.append(mask)
            h = pre * mask
            inputs.append(h)
        else:
            h = pre

    delta = (softmax(h, axis=-1) - onehot) * (1.0 / onehot.shape[0])
    grads: dict[str, Tensor] = {}
    for layer in reversed(range(layers)):
        grads[f'gm.{layer}.weight'] = inputs[layer].T @ delta
        grads[f'gm.{layer}.bias'] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ theta[f'gm.{layer}.weight'].T) * masks[layer - 1]
    return grads


def _check_keys(ga: Mapping, gb: Mapping) -> None:
    if set(ga) != set(gb):
        raise ContractError(f'gradient maps differ in parameters: {sorted(set(ga) ^ set(gb))}')


def gradient_distance(ga: Mapping[str, np.ndarray], gb: Mapping[str, np.ndarray]) -> float:
    """Sum over tensors of ``1 - cos(ga, gb)``.

    A pair of zero tensors contributes 0, a single zero tensor contributes 1.
    """
    _check_keys(ga, gb)
    total = 0.0
    for name in sorted(ga):
        a = np.ravel(ga[name]).astype(np.float64)
        b = np.ravel(gb[name]).astype(np.float64)
        norm_a, norm_b = np.linalg.norm(a), np.linalg.norm(b)
        if norm_a == 0.0 or norm_b == 0.0:
            total += 0.0 if norm_a == norm_b else 1.0
            continue
        total += 1.0 - float(a @ b) / (norm_a * norm_b)
    return total


def gradient_distance_tensor(target: Mapping[str, np.ndarray], candidate: Mapping[str, Tensor]) -> Tensor:
    """``gradient_distance`` with ``candidate`` differentiable."""
    _check_keys(target, candidate)
    total = lift(0.0)
    for name in sorted(target):
        a = np.asarray(target[name], dtype=np.float64)
        b = lift(candidate[name])
        norm_a, norm_b = float(np.linalg.norm(a)), float(np.linalg.norm(b.data))
        if norm_a == 0.0 or norm_b == 0.0:
            total = total + (0.0 if norm_a == norm_b else 1.0)
            continue
        cosine = (b * a).sum() / (sqrt((b * b).sum()) * norm_a)
        total = total + (1.0 - cosine)
    return total


def _onehot(y: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((y.size, n_classes))
    out[np.arange(y.size), y] = 1.0
    return out


def distill_gm(
    X: np.ndarray,
    y: np.ndarray,
    ipc: int,
    cfg: GmConfig | None = None,
    seed: int = 0,
    *,
    n_classes: int | None = None,
    space: SetSpace | str = SetSpace.original,
    init: DistilledSet | None = None,
) -> DistilledSet:
    """Match backbone gradients of the distilled set to those of the full data.

    Every epoch draws a fresh ``theta_0`` and runs ``cfg.inner_steps`` steps;
    each step moves the distilled features by SGD with momentum on the
    gradient distance and then moves ``theta`` one gradient step on the full
    data. ``init`` overrides the default per-class random starting sample.

    Raises
    ------
    TrainingError
        If the distance becomes NaN; ``epoch`` holds the failing epoch.
    """
    cfg = (cfg or GmConfig()).validate()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n_classes = int(y.max()) + 1 if n_classes is None else n_classes

    start = init if init is not None else distill_random(X, y, ipc, seed, n_classes=n_classes)
    features = start.features.copy()
    labels = start.labels
    real_onehot, syn_onehot = _onehot(y, n_classes), _onehot(labels, n_classes)
    opt = OptimizerState.sgd(cfg.lr_data, cfg.momentum_data)
    rng = Rng(seed).child('gm')
    logger.info(f'GM on {y.size} rows: n={labels.size} epochs={cfg.epochs} inner={cfg.inner_steps}')

    trace: list[float] = []
    for epoch in range(1, cfg.epochs + 1):
        theta = init_backbone(X.shape[1], n_classes, cfg, rng.child('theta', epoch))
        distances = []
        for inner in range(cfg.inner_steps):
            rows = slice(None)
            if cfg.batch_size is not None and cfg.batch_size < y.size:
                rows = np.sort(rng.child('batch', epoch, inner).choice(y.size, cfg.batch_size))
            real = {name: grad.data for name, grad in backbone_gradients(theta, X[rows], real_onehot[rows]).items()}

            graph = Graph()
            synthetic = backbone_gradients(theta, graph.param('features', features), syn_onehot)
            distance = gradient_distance_tensor(real, synthetic)
            if not np.isfinite(distance.item()):
                raise TrainingError(f'GM distance diverged at epoch {epoch}', epoch=epoch)
            distances.append(distance.item())
            features = step(opt, {'features': features}, backward(graph, distance))['features']
            theta = {name: value - cfg.lr_mlp * real[name] for name, value in theta.items()}

        trace.append(float(np.mean(distances)))
        logger.debug(f'GM epoch {epoch}: mean distance {trace[-1]:.5f}')

    logger.info(f'GM mean distance {trace[0]:.5g} -> {trace[-1]:.5g}')
    return DistilledSet(
        features, labels, space,
        method='gm', seed=seed, traces={'distance': trace}, n_classes=n_classes,
    )
