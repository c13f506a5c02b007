from __future__ import annotations

import numpy as np

from data import Homogenizer
from errors import DimensionError
from numerics.autodiff import Tensor, group_log_softmax, log_softmax, maximum, lift

__all__ = (
    'PROBABILITY_FLOOR',
    'group_softmax',
    'slot_weights',
    'recon_loss',
    'recon_loss_tensor',
    'cross_entropy_tensor',
)

PROBABILITY_FLOOR = 1e-12


def group_softmax(logits: np.ndarray, h: Homogenizer) -> np.ndarray:
    """Softmax applied independently to every feature group of ``logits``."""
    logits = np.asarray(logits, dtype=np.float64)
    out = np.empty_like(logits)
    for start, stop in h.slices:
        block = logits[..., start:stop]
        block = np.exp(block - block.max(axis=-1, keepdims=True))
        out[..., start:stop] = block / block.sum(axis=-1, keepdims=True)
    return out


def slot_weights(h: Homogenizer) -> np.ndarray:
    """Per-slot weight ``1 / (log2|b^i| (c + r))``; single-slot groups weigh zero."""
    weights = np.zeros(h.dim)
    for group in h.groups:
        if group.size > 1:
            weights[group.offset:group.stop] = 1.0 / (np.log2(group.size) * h.n_features)
    return weights


def recon_loss(b: np.ndarray, b_hat: np.ndarray, h: Homogenizer) -> float:
    """Weighted per-feature cross-entropy in bits, averaged over rows.

    Uniform predictions score exactly one; perfect predictions score zero.
    Predicted probabilities are floored at ``1e-12``.
    """
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    b_hat = np.atleast_2d(np.asarray(b_hat, dtype=np.float64))
    if b.shape != b_hat.shape or b.shape[1] != h.dim:
        raise DimensionError(f'recon_loss expects matching (n, {h.dim}) inputs, got {b.shape} and {b_hat.shape}')
    bits = -np.log2(np.maximum(b_hat, PROBABILITY_FLOOR))
    return float(np.mean((b * bits * slot_weights(h)).sum(axis=1)))


def recon_loss_tensor(logits: Tensor, b: np.ndarray, h: Homogenizer) -> Tensor:
    """Differentiable mean reconstruction loss from decoder logits."""
    b = np.asarray(b, dtype=np.float64)
    log_probs = maximum(group_log_softmax(logits, h.slices), float(np.log(PROBABILITY_FLOOR)))
    coefficients = -b * slot_weights(h) / (np.log(2.0) * b.shape[0])
    return (log_probs * coefficients).sum()


def cross_entropy_tensor(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean softmax cross-entropy (natural log) against integer labels."""
    logits = lift(logits)
    labels = np.asarray(labels, dtype=np.int64)
    targets = np.zeros(logits.shape)
    targets[np.arange(labels.size), labels] = -1.0 / labels.size
    return (log_softmax(logits, axis=-1) * targets).sum()
