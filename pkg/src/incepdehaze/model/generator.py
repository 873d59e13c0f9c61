"""Encoder-decoder generator with parallel standard/inception encoder branches."""

from __future__ import annotations

from ..autodiff import Tensor, add
from ..exceptions import ShapeError
from ..nn import ConvSpec, concat_channels, conv2d, conv_transpose2d, maxpool2d, relu, sigmoid
from .params import INCEPTION_BRANCHES, GeneratorConfig


def _conv(params, name, x, spec):
    return conv2d(x, params[f"{name}.w"], params[f"{name}.b"], spec)


def _conv_same(params, name, x):
    w = params[f"{name}.w"]
    cout, cin, kh, kw = w.shape
    return _conv(params, name, x, ConvSpec.same(cin, cout, kh, kw))


def inception_block(x: Tensor, params, name: str) -> Tensor:
    """Four size-preserving branches (1x1, 1x3, 3x1, 3x3), ReLU each, concatenated.

    Output channels ``[0, C'/4)`` come from the 1x1 branch, then 1x3, 3x1, 3x3.
    """
    outs = [relu(_conv_same(params, f"{name}.{branch}", x)) for branch, _, _ in INCEPTION_BRANCHES]
    return concat_channels(outs)


def _check_input(x, cfg):
    if x.data.ndim != 4 or x.shape[1] != cfg.input_channels:
        raise ShapeError(f"generator expects N x {cfg.input_channels} x H x W, got {x.shape}")
    h, w = x.shape[2:]
    if h % cfg.divisor or w % cfg.divisor:
        raise ShapeError(
            f"input {h}x{w} is not divisible by 2^{cfg.num_stages} = {cfg.divisor}"
        )


def encoder_forward(x: Tensor, params, cfg: GeneratorConfig):
    """Return ``(bottleneck, skips)`` with skips ordered shallowest-first."""
    _check_input(x, cfg)
    skips = []
    h = x
    for s in range(cfg.num_stages):
        std = relu(_conv_same(params, f"gen.enc.{s}.conv1", h))
        std = relu(_conv_same(params, f"gen.enc.{s}.conv2", std))
        inc = inception_block(h, params, f"gen.enc.{s}.inc")
        fused = add(std, inc)
        skips.append(fused)
        h = maxpool2d(fused, 2, 2)
    return h, skips


def decoder_forward(bottleneck: Tensor, skips, params, cfg: GeneratorConfig) -> Tensor:
    """Upsample through the stages, adding the matching skip after each upsample.

    ``skips`` is in encoder order (shallowest first); the deepest skip is
    consumed first.
    """
    if len(skips) != cfg.num_stages:
        raise ShapeError(f"expected {cfg.num_stages} skips, got {len(skips)}")
    h = bottleneck
    for s in reversed(range(cfg.num_stages)):
        h = relu(_conv_same(params, f"gen.dec.{s}.conv1", h))
        h = relu(_conv_same(params, f"gen.dec.{s}.conv2", h))
        w = params[f"gen.dec.{s}.up.w"]
        up = conv_transpose2d(h, w, params[f"gen.dec.{s}.up.b"], ConvSpec(w.shape[0], w.shape[1], 2, 2, 2))
        if up.shape != skips[s].shape:
            raise ShapeError(f"decoder stage {s}: upsampled {up.shape} vs skip {skips[s].shape}")
        h = add(up, skips[s])
    return sigmoid(_conv_same(params, "gen.out", h))


def generator_forward(x: Tensor, params, cfg: GeneratorConfig) -> Tensor:
    bottleneck, skips = encoder_forward(x, params, cfg)
    return decoder_forward(bottleneck, skips, params, cfg)
