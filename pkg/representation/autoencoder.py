from __future__ import annotations

import logging
from typing import Mapping

import numpy as np

from data import Homogenizer
from errors import ContractError, DimensionError
from numerics import Rng
from .configs import EncoderArch, EncoderConfig
from .encoders import (
    decoder_logits,
    forward_latent,
    head_logits,
    init_decoder_params,
    init_encoder_params,
    init_head_params,
)
from .losses import group_softmax

__all__ = (
    'Autoencoder',
    'init_autoencoder',
    'encode',
    'decode',
    'attach_head',
    'parameter_count',
    'expected_parameter_count',
    'leading_order_size',
)

logger = logging.getLogger(__name__)


class Autoencoder:
    """Column embeddings, encoder, decoder and an optional classifier head.

    Parameters
    ----------
    cfg: EncoderConfig
        Architecture description.
    homogenizer: Homogenizer
        Supplies the feature-group structure of the binary space.
    params: Mapping[str, np.ndarray]
        Every trainable tensor by name (see ``representation.encoders``).
    n_classes: int | None
        Width of the classifier head, ``None`` when no head is attached.
    """

    __slots__ = ('cfg', 'homogenizer', 'params', 'n_classes')

    def __init__(
        self,
        cfg: EncoderConfig,
        homogenizer: Homogenizer,
        params: Mapping[str, np.ndarray],
        *,
        n_classes: int | None = None,
    ) -> None:
        self.cfg: EncoderConfig = cfg
        self.homogenizer: Homogenizer = homogenizer
        self.params: dict[str, np.ndarray] = {name: np.asarray(value, dtype=np.float64) for name, value in params.items()}
        self.n_classes: int | None = n_classes

    @property
    def latent_dim(self) -> int:
        return self.cfg.latent_dim

    @property
    def input_dim(self) -> int:
        return self.homogenizer.dim

    @property
    def has_head(self) -> bool:
        return self.n_classes is not None

    def with_params(self, params: Mapping[str, np.ndarray]) -> Autoencoder:
        return Autoencoder(self.cfg, self.homogenizer, params, n_classes=self.n_classes)

    def encode(self, b: np.ndarray) -> np.ndarray:
        """Latent codes ``(rows, d)`` for binary rows."""
        return forward_latent(self.cfg, self.homogenizer, self.params, b).data.copy()

    def decode_logits(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        if z.shape[1] != self.latent_dim:
            raise DimensionError(f'latent codes must have width {self.latent_dim}, got {z.shape[1]}')
        return decoder_logits(self.cfg, self.params, z).data.copy()

    def decode(self, z: np.ndarray) -> np.ndarray:
        """Per-group probabilities ``(rows, D)``; every feature group sums to one."""
        return group_softmax(self.decode_logits(z), self.homogenizer)

    def reconstruct(self, b: np.ndarray) -> np.ndarray:
        return self.decode(self.encode(b))

    def classify_logits(self, b: np.ndarray) -> np.ndarray:
        if not self.has_head:
            raise ContractError('autoencoder has no classifier head; run fine_tune_supervised first')
        return head_logits(self.params, self.encode(b)).data.copy()

    def __repr__(self) -> str:
        head = f' head={self.n_classes}' if self.has_head else ''
        return f'<Autoencoder arch={self.cfg.tag} D={self.input_dim} d={self.latent_dim}{head} params={parameter_count(self)}>'


def init_autoencoder(cfg: EncoderConfig, h: Homogenizer, seed: int) -> Autoencoder:
    """Fan-in scaled uniform initialization of embeddings, encoder and decoder.

    Raises
    ------
    ConfigError
        If the configuration is invalid (for instance a GNN with ``m != d``).
    """
    cfg.validate()
    rng = Rng(seed).child('autoencoder', cfg.tag)
    params = {
        **init_encoder_params(cfg, h, rng.child('encoder')),
        **init_decoder_params(cfg, h, rng.child('decoder')),
    }
    ae = Autoencoder(cfg, h, params)
    logger.debug(f'Initialized {ae!r} with seed {seed}')
    return ae


def attach_head(ae: Autoencoder, n_classes: int, seed: int) -> Autoencoder:
    """Return a copy of ``ae`` with a freshly initialized classifier head."""
    if n_classes < 1:
        raise ContractError(f'classifier head needs at least one class, got {n_classes}')
    head = init_head_params(ae.cfg, n_classes, Rng(seed).child('head'))
    params = {name: value for name, value in ae.params.items() if not name.startswith('head.')}
    return Autoencoder(ae.cfg, ae.homogenizer, {**params, **head}, n_classes=n_classes)


def parameter_count(ae: Autoencoder, *, include_head: bool = False) -> int:
    return sum(
        int(value.size) for name, value in ae.params.items()
        if include_head or not name.startswith('head.')
    )


def expected_parameter_count(cfg: EncoderConfig, dim: int, n_features: int) -> int:
    """Exact number of embedding, encoder and decoder parameters, biases included.

    Parameters
    ----------
    cfg: EncoderConfig
        Architecture.
    dim: int
        ``D``, the binary width.
    n_features: int
        ``c + r``.
    """
    m, d = cfg.embedding_dim, cfg.latent_dim
    if cfg.arch is EncoderArch.ffn:
        width, depth = cfg.ffn_width, cfg.ffn_depth
        encoder = dim * m + n_features * m * width + width + depth * (width * width + width) + width * d + d
    elif cfg.arch is EncoderArch.gnn:
        encoder = dim * d + cfg.gnn_layers * (2 * d * d + d)
    else:
        qkv = cfg.tf_heads * cfg.tf_head_dim
        width = cfg.tf_mlp_width
        block = 4 * qkv * m + m * width + width + width * m + m
        encoder = dim * m + m + cfg.tf_blocks * block + m * d + d

    decoder = 0
    fan_in = d
    for _ in range(cfg.decoder_depth):
        decoder += fan_in * cfg.decoder_width + cfg.decoder_width
        fan_in = cfg.decoder_width
    decoder += fan_in * dim + dim
    return encoder + decoder


def leading_order_size(cfg: EncoderConfig, dim: int, n_features: int) -> int:
    """Dominant encoder size terms: ``DM + (c+r)MW + HW^2 + Wd`` (FFN),
    ``Dd + Hd^2`` (GNN) and ``H(4 d_qkv M h + 2MW)`` (TF)."""
    m, d = cfg.embedding_dim, cfg.latent_dim
    if cfg.arch is EncoderArch.ffn:
        width = cfg.ffn_width
        return dim * m + n_features * m * width + cfg.ffn_depth * width * width + width * d
    if cfg.arch is EncoderArch.gnn:
        return dim * d + cfg.gnn_layers * d * d
    return cfg.tf_blocks * (4 * cfg.tf_head_dim * m * cfg.tf_heads + 2 * m * cfg.tf_mlp_width)


def encode(ae: Autoencoder, b: np.ndarray) -> np.ndarray:
    return ae.encode(b)


def decode(ae: Autoencoder, z: np.ndarray) -> np.ndarray:
    return ae.decode(z)
