from .autoencoder import (
    Autoencoder,
    attach_head,
    decode,
    encode,
    expected_parameter_count,
    init_autoencoder,
    leading_order_size,
    parameter_count,
)
from .checkpoint import load_autoencoder, save_autoencoder
from .configs import EncoderArch, EncoderConfig, TrainConfig
from .encoders import active_indices, decoder_logits, forward_latent, head_logits
from .losses import PROBABILITY_FLOOR, cross_entropy_tensor, group_softmax, recon_loss, recon_loss_tensor, slot_weights
from .training import TrainHistory, fine_tune_supervised, train_unsupervised

__all__ = (
    'Autoencoder',
    'attach_head',
    'decode',
    'encode',
    'expected_parameter_count',
    'init_autoencoder',
    'leading_order_size',
    'parameter_count',
    'load_autoencoder',
    'save_autoencoder',
    'EncoderArch',
    'EncoderConfig',
    'TrainConfig',
    'active_indices',
    'decoder_logits',
    'forward_latent',
    'head_logits',
    'PROBABILITY_FLOOR',
    'cross_entropy_tensor',
    'group_softmax',
    'recon_loss',
    'recon_loss_tensor',
    'slot_weights',
    'TrainHistory',
    'fine_tune_supervised',
    'train_unsupervised',
)
