from __future__ import annotations

import logging
from pathlib import Path

from data import Homogenizer
from numerics import pack_array, read_document, unpack_array, write_document
from .autoencoder import Autoencoder
from .configs import EncoderConfig

__all__ = ('CHECKPOINT_FORMAT', 'CHECKPOINT_VERSION', 'save_autoencoder', 'load_autoencoder')

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 'tdcoler-autoencoder'
CHECKPOINT_VERSION = 1


def save_autoencoder(ae: Autoencoder, path: str | Path) -> Path:
    """Write config, homogenizer and every parameter tensor as one msgpack document."""
    path = write_document(path, CHECKPOINT_FORMAT, CHECKPOINT_VERSION, {
        'config': ae.cfg.to_dict(),
        'homogenizer': ae.homogenizer.to_dict(),
        'n_classes': ae.n_classes,
        'params': {name: pack_array(value) for name, value in sorted(ae.params.items())},
    })
    logger.debug(f'Saved {ae!r} to {path}')
    return path


def load_autoencoder(path: str | Path) -> Autoencoder:
    raw = read_document(path, CHECKPOINT_FORMAT, (CHECKPOINT_VERSION,))
    return Autoencoder(
        EncoderConfig.from_dict(raw['config']),
        Homogenizer.from_dict(raw['homogenizer']),
        {name: unpack_array(value) for name, value in raw['params'].items()},
        n_classes=raw['n_classes'],
    )
