"""Encoder, decoder and classifier-head forward passes over named parameters.

Parameters are passed as a mapping of name to array (evaluation) or to graph
tensors (training); the same code serves both.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from data import Homogenizer
from errors import ContractError, DimensionError
from numerics import Rng
from numerics.autodiff import Tensor, concat, lift, relu, softmax, take
from .configs import EncoderArch, EncoderConfig

__all__ = (
    'Params',
    'active_indices',
    'init_encoder_params',
    'init_decoder_params',
    'init_head_params',
    'forward_latent',
    'decoder_logits',
    'head_logits',
)

Params = Mapping[str, 'np.ndarray | Tensor']


def _linear(rng: Rng, fan_in: int, fan_out: int) -> tuple[np.ndarray, np.ndarray]:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, (fan_in, fan_out)), rng.uniform(-bound, bound, fan_out)


def _add_linear(params: dict[str, np.ndarray], rng: Rng, prefix: str, fan_in: int, fan_out: int, *, bias: bool = True) -> None:
    weight, offset = _linear(rng.child(prefix), fan_in, fan_out)
    params[f'{prefix}.weight'] = weight
    if bias:
        params[f'{prefix}.bias'] = offset


def init_encoder_params(cfg: EncoderConfig, h: Homogenizer, rng: Rng) -> dict[str, np.ndarray]:
    """Column embeddings plus the architecture-specific encoder weights."""
    m, d = cfg.embedding_dim, cfg.latent_dim
    bound = 1.0 / np.sqrt(m)
    params = {'embeddings': rng.child('embeddings').uniform(-bound, bound, (h.dim, m))}

    if cfg.arch is EncoderArch.ffn:
        _add_linear(params, rng, 'ffn.input', h.n_features * m, cfg.ffn_width)
        for i in range(cfg.ffn_depth):
            _add_linear(params, rng, f'ffn.hidden.{i}', cfg.ffn_width, cfg.ffn_width)
        _add_linear(params, rng, 'ffn.output', cfg.ffn_width, d)

    elif cfg.arch is EncoderArch.gnn:
        for layer in range(cfg.gnn_layers):
            _add_linear(params, rng, f'gnn.{layer}', 2 * d, d)

    else:
        width = cfg.tf_heads * cfg.tf_head_dim
        params['tf.cls'] = rng.child('tf.cls').uniform(-bound, bound, (1, m))
        for k in range(cfg.tf_blocks):
            for role in ('query', 'key', 'value'):
                _add_linear(params, rng, f'tf.{k}.{role}', m, width, bias=False)
            _add_linear(params, rng, f'tf.{k}.out', width, m, bias=False)
            _add_linear(params, rng, f'tf.{k}.mlp.0', m, cfg.tf_mlp_width)
            _add_linear(params, rng, f'tf.{k}.mlp.1', cfg.tf_mlp_width, m)
        _add_linear(params, rng, 'tf.output', m, d)
    return params


def init_decoder_params(cfg: EncoderConfig, h: Homogenizer, rng: Rng) -> dict[str, np.ndarray]:
    params: dict[str, np.ndarray] = {}
    fan_in = cfg.latent_dim
    for i in range(cfg.decoder_depth):
        _add_linear(params, rng, f'decoder.{i}', fan_in, cfg.decoder_width)
        fan_in = cfg.decoder_width
    _add_linear(params, rng, 'decoder.output', fan_in, h.dim)
    return params


def init_head_params(cfg: EncoderConfig, n_classes: int, rng: Rng) -> dict[str, np.ndarray]:
    params: dict[str, np.ndarray] = {}
    _add_linear(params, rng, 'head.0', cfg.latent_dim, cfg.head_width)
    _add_linear(params, rng, 'head.output', cfg.head_width, n_classes)
    return params


def active_indices(h: Homogenizer, b: np.ndarray) -> np.ndarray:
    """Index of the hot slot of every feature group, shape ``(rows, c + r)``.

    Raises
    ------
    ContractError
        If any row does not hold exactly one one per feature group.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 2 or b.shape[1] != h.dim:
        raise DimensionError(f'expected a binary matrix with {h.dim} columns, got shape {b.shape}')
    if not np.all((b == 0.0) | (b == 1.0)):
        raise ContractError('encoder input must be binary')
    indices = np.empty((b.shape[0], h.n_features), dtype=np.int64)
    for j, (start, stop) in enumerate(h.slices):
        block = b[:, start:stop]
        if not np.all(block.sum(axis=1) == 1.0):
            raise ContractError(f'wrong popcount in feature group {h.groups[j].name!r}: every row needs exactly c + r ones')
        indices[:, j] = start + block.argmax(axis=1)
    return indices


def _dropout(x: Tensor, rate: float, rng: Rng | None) -> Tensor:
    if rng is None or rate <= 0.0:
        return x
    keep = 1.0 - rate
    return x * (rng.bernoulli(keep, x.shape) / keep)


def _ffn(cfg: EncoderConfig, p: Params, indices: np.ndarray, rng: Rng | None) -> Tensor:
    x = take(p['embeddings'], indices).reshape(indices.shape[0], -1)
    x = _dropout(relu(x @ p['ffn.input.weight'] + p['ffn.input.bias']), cfg.dropout, rng)
    for i in range(cfg.ffn_depth):
        x = _dropout(relu(x @ p[f'ffn.hidden.{i}.weight'] + p[f'ffn.hidden.{i}.bias']), cfg.dropout, rng)
    return x @ p['ffn.output.weight'] + p['ffn.output.bias']


def _gnn(cfg: EncoderConfig, p: Params, b: np.ndarray) -> Tensor:
    # bipartite row/column graph: rows aggregate their active columns, columns their rows
    row_mean = b / b.sum(axis=1, keepdims=True)
    col_mean = (b / np.maximum(b.sum(axis=0), 1.0)).T
    z = lift(np.zeros((b.shape[0], cfg.latent_dim)))
    w = lift(p['embeddings'])
    for layer in range(cfg.gnn_layers):
        weight, bias = p[f'gnn.{layer}.weight'], p[f'gnn.{layer}.bias']
        z = concat([z, row_mean @ w], axis=1) @ weight + bias
        if layer == cfg.gnn_layers - 1:
            break
        z = relu(z)
        w = relu(concat([w, col_mean @ z], axis=1) @ weight + bias)
    return z


def _split_heads(x: Tensor, rows: int, tokens: int, heads: int, width: int) -> Tensor:
    return x.reshape(rows, tokens, heads, width).transpose(0, 2, 1, 3).reshape(rows * heads, tokens, width)


def _tf(cfg: EncoderConfig, p: Params, indices: np.ndarray) -> Tensor:
    rows, tokens = indices.shape[0], indices.shape[1] + 1
    heads, width = cfg.tf_heads, cfg.tf_head_dim
    cls = take(p['tf.cls'], np.zeros((rows, 1), dtype=np.int64))
    x = concat([cls, take(p['embeddings'], indices)], axis=1)
    scale = 1.0 / np.sqrt(width)

    for k in range(cfg.tf_blocks):
        q = _split_heads(x @ p[f'tf.{k}.query.weight'], rows, tokens, heads, width)
        keys = _split_heads(x @ p[f'tf.{k}.key.weight'], rows, tokens, heads, width)
        v = _split_heads(x @ p[f'tf.{k}.value.weight'], rows, tokens, heads, width)
        attention = softmax((q @ keys.transpose(0, 2, 1)) * scale, axis=-1)
        mixed = (attention @ v).reshape(rows, heads, tokens, width).transpose(0, 2, 1, 3)
        x = x + mixed.reshape(rows, tokens, heads * width) @ p[f'tf.{k}.out.weight']
        hidden = relu(x @ p[f'tf.{k}.mlp.0.weight'] + p[f'tf.{k}.mlp.0.bias'])
        x = x + (hidden @ p[f'tf.{k}.mlp.1.weight'] + p[f'tf.{k}.mlp.1.bias'])

    return x[:, 0, :] @ p['tf.output.weight'] + p['tf.output.bias']


def forward_latent(
    cfg: EncoderConfig,
    h: Homogenizer,
    p: Params,
    b: np.ndarray,
    *,
    rng: Rng | None = None,
) -> Tensor:
    """Encode binary rows into ``(rows, d)`` latent codes.

    ``rng`` enables dropout (training only).
    """
    indices = active_indices(h, b)
    if cfg.arch is EncoderArch.ffn:
        return _ffn(cfg, p, indices, rng)
    if cfg.arch is EncoderArch.gnn:
        return _gnn(cfg, p, np.asarray(b, dtype=np.float64))
    return _tf(cfg, p, indices)


def decoder_logits(cfg: EncoderConfig, p: Params, z) -> Tensor:
    x = lift(z)
    for i in range(cfg.decoder_depth):
        x = relu(x @ p[f'decoder.{i}.weight'] + p[f'decoder.{i}.bias'])
    return x @ p['decoder.output.weight'] + p['decoder.output.bias']


def head_logits(p: Params, z) -> Tensor:
    x = relu(lift(z) @ p['head.0.weight'] + p['head.0.bias'])
    return x @ p['head.output.weight'] + p['head.output.bias']
