"""Deep-image-prior engine: numpy network, autodiff and the fitting loop."""

from .network import (
    NetworkState,
    SkipNet,
    SkipNetConfig,
    forward,
    init_network,
    param_shapes,
)
from .train import (
    Adam,
    LossMask,
    TrainSpec,
    grad_check,
    make_noise_input,
    masked_mse,
    masked_mse_grad,
    train_dip,
)

__all__ = [
    "Adam",
    "LossMask",
    "NetworkState",
    "SkipNet",
    "SkipNetConfig",
    "TrainSpec",
    "forward",
    "grad_check",
    "init_network",
    "make_noise_input",
    "masked_mse",
    "masked_mse_grad",
    "param_shapes",
    "train_dip",
]
