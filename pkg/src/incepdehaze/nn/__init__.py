"""Layer primitives and losses built on :mod:`incepdehaze.autodiff`."""

from .functional import (
    BatchNormState,
    ConvSpec,
    activation,
    batchnorm2d,
    bce_with_logits,
    concat_channels,
    conv2d,
    conv_transpose2d,
    l1_loss,
    leaky_relu,
    maxpool2d,
    relu,
    sigmoid,
)

__all__ = [
    "BatchNormState",
    "ConvSpec",
    "activation",
    "batchnorm2d",
    "bce_with_logits",
    "concat_channels",
    "conv2d",
    "conv_transpose2d",
    "l1_loss",
    "leaky_relu",
    "maxpool2d",
    "relu",
    "sigmoid",
]
