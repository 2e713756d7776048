from .estimator import SupportAutoencoder
from .network import (
    AdamState,
    DecoderParams,
    Gradients,
    adam_step,
    backward,
    cross_entropy_loss,
    decoder_forward,
    encoder_forward,
    init_decoder,
    init_matrix,
    project_pilot_power,
)
from .training import TrainConfig, TrainResult, evaluate_loss, train

__all__ = [
    "SupportAutoencoder",
    "AdamState",
    "DecoderParams",
    "Gradients",
    "adam_step",
    "backward",
    "cross_entropy_loss",
    "decoder_forward",
    "encoder_forward",
    "init_decoder",
    "init_matrix",
    "project_pilot_power",
    "TrainConfig",
    "TrainResult",
    "evaluate_loss",
    "train",
]
