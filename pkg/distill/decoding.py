from __future__ import annotations

import logging

from errors import ContractError, DimensionError
from representation import Autoencoder
from .base import DistilledSet, SetSpace

__all__ = ('decode_distilled',)

logger = logging.getLogger(__name__)


def decode_distilled(ae: Autoencoder, latent: DistilledSet) -> DistilledSet:
    """Map a latent distilled set through the decoder and group-wise softmax."""
    if latent.space is not SetSpace.latent:
        raise ContractError(f'expected a latent distilled set, got space {latent.space.value!r}')
    if latent.width != ae.latent_dim:
        raise DimensionError(f'latent width {latent.width} does not match the autoencoder (d={ae.latent_dim})')
    decoded = DistilledSet(
        ae.decode(latent.features), latent.labels, SetSpace.decoded,
        method=latent.method, seed=latent.seed,
        source_indices=latent.source_indices, traces=latent.traces,
        targets=latent.targets, n_classes=latent.n_classes,
    )
    logger.debug(f'Decoded {latent!r} into {decoded!r}')
    return decoded
