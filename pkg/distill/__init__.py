from __future__ import annotations

import logging

import numpy as np

from .agglomerative import WardTree, distill_agglomerative, ward_clusters, ward_tree
from .base import (
    DistillConfig,
    DistillMethod,
    DistillSpace,
    DistilledSet,
    GmConfig,
    KipConfig,
    OutputKind,
    SetSpace,
    class_members,
)
from .decoding import decode_distilled
from .gm import backbone_gradients, distill_gm, gradient_distance, gradient_distance_tensor, init_backbone
from .kernel import decode_predictions, encode_targets, kip_predict, krr_predict, ntk, ntk_tensor
from .kip import distill_kip, kip_loss
from .kmeans import KMeansRun, closest_members, distill_kmeans, kmeans, lloyd
from .sampling import distill_random, random_indices

__all__ = (
    'distill',
    'WardTree',
    'distill_agglomerative',
    'ward_clusters',
    'ward_tree',
    'DistillConfig',
    'DistillMethod',
    'DistillSpace',
    'DistilledSet',
    'GmConfig',
    'KipConfig',
    'OutputKind',
    'SetSpace',
    'class_members',
    'decode_distilled',
    'backbone_gradients',
    'distill_gm',
    'gradient_distance',
    'gradient_distance_tensor',
    'init_backbone',
    'decode_predictions',
    'encode_targets',
    'kip_predict',
    'krr_predict',
    'ntk',
    'ntk_tensor',
    'distill_kip',
    'kip_loss',
    'KMeansRun',
    'closest_members',
    'distill_kmeans',
    'kmeans',
    'lloyd',
    'distill_random',
    'random_indices',
)

logger = logging.getLogger(__name__)


def distill(X: np.ndarray, y: np.ndarray, cfg: DistillConfig, *, n_classes: int | None = None) -> DistilledSet:
    """Run the distiller named by ``cfg`` on features ``X`` in ``cfg.space``."""
    cfg.validate()
    space = SetSpace(cfg.space.value)
    method = cfg.method
    logger.debug(f'Distilling {len(y)} rows with {cfg.tag} at ipc={cfg.ipc} in {space.value} space')
    if method is DistillMethod.random:
        return distill_random(X, y, cfg.ipc, cfg.seed, n_classes=n_classes, space=space)
    if method is DistillMethod.kmeans:
        return distill_kmeans(
            X, y, cfg.ipc, cfg.output, cfg.seed, cfg.restarts,
            max_iter=cfg.max_iter, n_classes=n_classes, space=space,
        )
    if method is DistillMethod.agglomerative:
        return distill_agglomerative(X, y, cfg.ipc, cfg.output, n_classes=n_classes, space=space)
    if method is DistillMethod.kip:
        return distill_kip(X, y, cfg.ipc, cfg.kip, cfg.seed, n_classes=n_classes, space=space)
    return distill_gm(X, y, cfg.ipc, cfg.gm, cfg.seed, n_classes=n_classes, space=space)
