"""Six-block patch discriminator emitting a single-channel logit map."""

import numpy as np

from ..autodiff import Tensor
from ..exceptions import ShapeError
from ..nn import BatchNormState, ConvSpec, batchnorm2d, conv2d, leaky_relu
from ..nn.functional import stable_sigmoid
from .params import DiscriminatorConfig


def discriminator_forward(x: Tensor, params, cfg: DiscriminatorConfig, mode="train") -> Tensor:
    """Patch logits ``[N, 1, h, w]``.

    Blocks are conv -> leaky ReLU -> batch norm, with no norm in the first
    block. Stride-2 blocks use 4x4 kernels, stride-1 blocks 3x3, both with
    padding 1. Batch-norm running statistics in ``params.buffers`` are
    updated in place when ``mode == "train"``.
    """
    if x.data.ndim != 4 or x.shape[1] != cfg.input_channels:
        raise ShapeError(f"discriminator expects N x {cfg.input_channels} x H x W, got {x.shape}")
    need = 2 ** sum(1 for s in cfg.strides if s == 2)
    if min(x.shape[2:]) < need:
        raise ShapeError(f"input {x.shape[2]}x{x.shape[3]} smaller than the minimum {need}")

    h = x
    for i, stride in enumerate(cfg.strides):
        w = params[f"disc.block.{i}.conv.w"]
        k, pad = cfg.kernel(stride)
        spec = ConvSpec(w.shape[1], w.shape[0], k, k, stride, pad, pad)
        h = conv2d(h, w, params[f"disc.block.{i}.conv.b"], spec)
        h = leaky_relu(h, cfg.slope)
        if i > 0:
            name = f"disc.block.{i}.bn"
            state = BatchNormState(
                params[f"{name}.gamma"],
                params[f"{name}.beta"],
                params.buffers[f"{name}.running_mean"],
                params.buffers[f"{name}.running_var"],
                mode=mode,
            )
            h = batchnorm2d(h, state)
    w = params["disc.out.w"]
    return conv2d(h, w, params["disc.out.b"], ConvSpec(w.shape[1], 1, 1, 1))


def patch_probabilities(logits: Tensor) -> np.ndarray:
    """Inference-time sigmoid of the patch logits."""
    return stable_sigmoid(logits.data)
