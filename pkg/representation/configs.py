from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from typing import Any, TYPE_CHECKING

from errors import ConfigError

if TYPE_CHECKING:
    from typing import Self

__all__ = ('EncoderArch', 'EncoderConfig', 'TrainConfig')


class EncoderArch(Enum):
    ffn = 'ffn'
    gnn = 'gnn'
    tf = 'tf'


def _known(cls, raw: dict[str, Any]) -> dict[str, Any]:
    names = {field.name for field in fields(cls)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(f'unknown {cls.__name__} keys: {unknown}')
    return dict(raw)


@dataclass(frozen=True, slots=True)
class EncoderConfig:
    """Architecture of the column-embedding autoencoder.

    ``embedding_dim`` is ``m``, ``latent_dim`` is ``d``. The GNN passes
    ``d``-wide messages, so it requires ``m == d``.
    """

    arch: EncoderArch = EncoderArch.ffn
    latent_dim: int = 16
    embedding_dim: int = 16
    # ffn
    ffn_width: int = 100
    ffn_depth: int = 1
    dropout: float = 0.0
    # gnn
    gnn_layers: int = 3
    gnn_aggregation: str = 'mean'
    # tf
    tf_blocks: int = 2
    tf_heads: int = 4
    tf_head_dim: int = 8
    tf_mlp_width: int = 128
    # decoder and classifier head
    decoder_width: int = 100
    decoder_depth: int = 1
    head_width: int = 100

    def __post_init__(self) -> None:
        if not isinstance(self.arch, EncoderArch):
            object.__setattr__(self, 'arch', EncoderArch(self.arch))

    def validate(self) -> EncoderConfig:
        widths = {
            'latent_dim': self.latent_dim, 'embedding_dim': self.embedding_dim,
            'ffn_width': self.ffn_width, 'ffn_depth': self.ffn_depth,
            'gnn_layers': self.gnn_layers, 'tf_blocks': self.tf_blocks,
            'tf_heads': self.tf_heads, 'tf_head_dim': self.tf_head_dim,
            'tf_mlp_width': self.tf_mlp_width, 'decoder_width': self.decoder_width,
            'decoder_depth': self.decoder_depth, 'head_width': self.head_width,
        }
        small = [name for name, value in widths.items() if value < 1]
        if small:
            raise ConfigError(f'encoder widths and depths must be >= 1: {small}')
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f'dropout must lie in [0, 1), got {self.dropout}')
        if self.arch is EncoderArch.gnn and self.embedding_dim != self.latent_dim:
            raise ConfigError(
                f'gnn encoder needs embedding_dim == latent_dim, got {self.embedding_dim} and {self.latent_dim}'
            )
        if self.gnn_aggregation != 'mean':
            raise ConfigError(f'unsupported gnn aggregation {self.gnn_aggregation!r}')
        return self

    @property
    def tag(self) -> str:
        return self.arch.value

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> Self:
        raw = _known(cls, raw)
        arch = EncoderArch(raw.get('arch', 'ffn'))
        if arch is EncoderArch.gnn and 'embedding_dim' not in raw:
            raw['embedding_dim'] = raw.get('latent_dim', 16)
        raw['arch'] = arch
        return cls(**raw).validate()

    def to_dict(self) -> dict[str, Any]:
        raw = asdict(self)
        raw['arch'] = self.arch.value
        return raw


@dataclass(frozen=True, slots=True)
class TrainConfig:
    """Optimization settings for autoencoder training and fine-tuning.

    When no validation matrix is passed to training, the last
    ``val_fraction`` of a seeded shuffle of the training rows is held out.
    """

    epochs: int = 100
    batch_size: int = 256
    learning_rate: float = 1e-3
    weight_decay: float = 0.0
    alpha: float = 0.5
    patience: int = 16
    val_fraction: float = 0.15
    seed: int = 0

    def validate(self) -> TrainConfig:
        if self.epochs < 0:
            raise ConfigError(f'epochs must be >= 0, got {self.epochs}')
        if self.batch_size < 1:
            raise ConfigError(f'batch size must be >= 1, got {self.batch_size}')
        if not self.learning_rate > 0:
            raise ConfigError(f'learning rate must be positive, got {self.learning_rate}')
        if self.weight_decay < 0:
            raise ConfigError(f'weight decay must be >= 0, got {self.weight_decay}')
        if not self.alpha > 0:
            raise ConfigError(f'alpha must be positive, got {self.alpha}')
        if self.patience < 1:
            raise ConfigError(f'patience must be >= 1, got {self.patience}')
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError(f'val_fraction must lie in (0, 1), got {self.val_fraction}')
        return self

    def with_seed(self, seed: int) -> TrainConfig:
        return replace(self, seed=seed)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> Self:
        return cls(**_known(cls, raw)).validate()

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)
