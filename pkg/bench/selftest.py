"""Finite-difference checks of every differentiable objective on tiny instances."""

from __future__ import annotations

import logging

import numpy as np

from data import ColumnKind, FeatureGroup, Homogenizer
from distill import GmConfig, backbone_gradients, encode_targets, gradient_distance_tensor, init_backbone, kip_loss
from numerics import GradCheckReport, Rng, grad_check
from representation import (
    EncoderConfig,
    attach_head,
    cross_entropy_tensor,
    decoder_logits,
    forward_latent,
    head_logits,
    init_autoencoder,
    recon_loss_tensor,
)

__all__ = ('toy_homogenizer', 'toy_rows', 'check_reconstruction', 'check_fine_tune', 'check_kip', 'check_gm', 'run_grad_checks')

logger = logging.getLogger(__name__)

_TINY = EncoderConfig(
    latent_dim=2, embedding_dim=2, ffn_width=3, ffn_depth=1,
    decoder_width=3, decoder_depth=1, head_width=3,
)


def toy_homogenizer() -> Homogenizer:
    """One three-bin numerical feature and one three-category feature (D = 6)."""
    return Homogenizer(groups=(
        FeatureGroup('x', ColumnKind.numerical, 0, 3, edges=(0.0, 1.0)),
        FeatureGroup('color', ColumnKind.categorical, 3, 3, categories=('blue', 'green', 'red')),
    ))


def toy_rows(h: Homogenizer, rng: Rng, rows: int) -> np.ndarray:
    b = np.zeros((rows, h.dim))
    for group in h.groups:
        b[np.arange(rows), group.offset + rng.child(group.name).integers(group.size, rows)] = 1.0
    return b


def _split(params: dict[str, np.ndarray], names: tuple[str, ...]) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    interest = {name: params[name] for name in names}
    fixed = {name: value for name, value in params.items() if name not in interest}
    return interest, fixed


def check_reconstruction(seed: int = 0) -> GradCheckReport:
    h = toy_homogenizer()
    ae = init_autoencoder(_TINY, h, seed)
    b = toy_rows(h, Rng(seed).child('rows'), 6)
    interest, fixed = _split(ae.params, ('embeddings', 'decoder.output.bias'))

    def build(graph):
        p = {**fixed, **graph.params}
        return recon_loss_tensor(decoder_logits(_TINY, p, forward_latent(_TINY, h, p, b)), b, h)

    return grad_check(build, interest)


def check_fine_tune(seed: int = 0, alpha: float = 0.5) -> GradCheckReport:
    h = toy_homogenizer()
    ae = attach_head(init_autoencoder(_TINY, h, seed), 2, seed)
    rng = Rng(seed).child('rows')
    b = toy_rows(h, rng, 6)
    labels = rng.child('labels').integers(2, 6)
    interest, fixed = _split(ae.params, ('head.output.weight', 'head.output.bias', 'ffn.output.bias'))

    def build(graph):
        p = {**fixed, **graph.params}
        z = forward_latent(_TINY, h, p, b)
        recon = recon_loss_tensor(decoder_logits(_TINY, p, z), b, h)
        return recon + alpha * cross_entropy_tensor(head_logits(p, z), labels)

    return grad_check(build, interest)


def check_kip(seed: int = 0, ridge: float = 1e-2) -> GradCheckReport:
    """Gradient through the kernel ridge solve with respect to the support points."""
    rng = Rng(seed).child('kip')
    X = rng.child('X').normal((10, 3))
    y = np.arange(10) % 2
    support = rng.child('support').normal((4, 3))
    support_targets = encode_targets(np.array([0, 0, 1, 1]), 2)
    targets = encode_targets(y, 2)
    return grad_check(
        lambda graph: kip_loss(graph.params['support'], support_targets, X, targets, ridge),
        {'support': support},
        tolerance=1e-3,
    )


def check_gm(seed: int = 0) -> GradCheckReport:
    """Gradient of the gradient-matching distance with respect to the synthetic features."""
    rng = Rng(seed).child('gm')
    cfg = GmConfig(hidden_width=4, depth=1)
    X = rng.child('X').normal((10, 3))
    onehot = np.eye(2)[np.arange(10) % 2]
    theta = init_backbone(3, 2, cfg, rng.child('theta'))
    real = {name: grad.data for name, grad in backbone_gradients(theta, X, onehot).items()}
    features = rng.child('features').normal((4, 3))
    syn_onehot = np.eye(2)[[0, 0, 1, 1]]
    return grad_check(
        lambda graph: gradient_distance_tensor(real, backbone_gradients(theta, graph.params['features'], syn_onehot)),
        {'features': features},
    )


def run_grad_checks(seed: int = 0) -> dict[str, GradCheckReport]:
    reports = {
        'reconstruction': check_reconstruction(seed),
        'fine-tune': check_fine_tune(seed),
        'kip': check_kip(seed),
        'gm': check_gm(seed),
    }
    for name, report in reports.items():
        logger.info(f'{name}: {report!r}')
    return reports
