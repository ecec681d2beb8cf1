"""
Minimal differentiable compute core: dense, batchnorm, dropout, leaky ReLU
and residual layers with explicit backward passes, Adam and gradient checks.
"""

from .gradcheck import grad_check
from .layers import (
    BatchNormState,
    Dense,
    Mode,
    Param,
    ResidualBlock,
    ResidualConfig,
    batchnorm_backward,
    batchnorm_forward,
    dense_backward,
    dense_forward,
    dropout,
    dropout_backward,
    leaky_relu,
    leaky_relu_backward,
    residual_block_backward,
    residual_block_forward,
)
from .optim import Adam, AdamConfig, adam_step, lr_schedule
from .rng import RngStream

__all__ = [
    "Adam", "AdamConfig", "BatchNormState", "Dense", "Mode", "Param", "ResidualBlock",
    "ResidualConfig", "RngStream", "adam_step", "batchnorm_backward", "batchnorm_forward",
    "dense_backward", "dense_forward", "dropout", "dropout_backward", "grad_check",
    "leaky_relu", "leaky_relu_backward", "lr_schedule", "residual_block_backward",
    "residual_block_forward",
]
