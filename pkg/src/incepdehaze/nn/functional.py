"""Differentiable layer primitives on NCHW tensors.

All convolutions are cross-correlations (no kernel flip). Transposed
convolution weights follow the ``[in_channels, out_channels, kh, kw]``
layout, so ``conv_transpose2d(y, w)`` is the adjoint of ``conv2d(x, w)``
for the same ``w``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..autodiff.tensor import Tensor, make_op
from ..exceptions import ContractError, ShapeError


@dataclass(frozen=True)
class ConvSpec:
    in_channels: int
    out_channels: int
    kernel_h: int
    kernel_w: int
    stride: int = 1
    pad_h: int = 0
    pad_w: int = 0

    def __post_init__(self):
        for name in ("in_channels", "out_channels", "kernel_h", "kernel_w", "stride"):
            if getattr(self, name) <= 0:
                raise ShapeError(f"ConvSpec.{name} must be positive")
        if self.pad_h < 0 or self.pad_w < 0:
            raise ShapeError("ConvSpec padding must be non-negative")

    @classmethod
    def same(cls, in_channels, out_channels, kernel_h, kernel_w):
        """Stride-1 spec whose padding preserves spatial size (odd kernels)."""
        return cls(in_channels, out_channels, kernel_h, kernel_w, 1, kernel_h // 2, kernel_w // 2)

    def output_size(self, h, w):
        oh = (h + 2 * self.pad_h - self.kernel_h) // self.stride + 1
        ow = (w + 2 * self.pad_w - self.kernel_w) // self.stride + 1
        if oh < 1 or ow < 1 or h + 2 * self.pad_h < self.kernel_h or w + 2 * self.pad_w < self.kernel_w:
            raise ShapeError(f"convolution output would be empty for input {h}x{w} and {self}")
        return oh, ow

    def transposed_output_size(self, h, w):
        oh = (h - 1) * self.stride - 2 * self.pad_h + self.kernel_h
        ow = (w - 1) * self.stride - 2 * self.pad_w + self.kernel_w
        if oh < 1 or ow < 1:
            raise ShapeError(f"transposed convolution output would be empty for {h}x{w}")
        return oh, ow


def _windows(xp, kh, kw, stride, oh, ow):
    """(N, C, Hp, Wp) -> (N*oh*ow, C*kh*kw) patch matrix."""
    n, c = xp.shape[:2]
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    win = win[:, :, : (oh - 1) * stride + 1 : stride, : (ow - 1) * stride + 1 : stride]
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * kh * kw)


def _scatter(cols, n, c, hp, wp, kh, kw, stride, oh, ow):
    """Adjoint of :func:`_windows`: sum patch rows back into an image."""
    out = np.zeros((n, c, hp, wp), dtype=cols.dtype)
    cols = cols.reshape(n, oh, ow, c, kh, kw).transpose(0, 3, 4, 5, 1, 2)
    for i in range(kh):
        for j in range(kw):
            out[:, :, i : i + stride * (oh - 1) + 1 : stride, j : j + stride * (ow - 1) + 1 : stride] += cols[:, :, i, j]
    return out


def _spec_for(w, spec, transposed):
    if spec is not None:
        return spec
    if transposed:
        return ConvSpec(w.shape[0], w.shape[1], w.shape[2], w.shape[3])
    return ConvSpec(w.shape[1], w.shape[0], w.shape[2], w.shape[3])


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, spec: ConvSpec | None = None) -> Tensor:
    """Cross-correlate ``x[N,Cin,H,W]`` with ``w[Cout,Cin,kh,kw]`` and add ``b``."""
    spec = _spec_for(w, spec, transposed=False)
    if x.data.ndim != 4:
        raise ShapeError(f"conv2d expects NCHW input, got {x.shape}")
    n, cin, h, wd = x.shape
    expected = (spec.out_channels, spec.in_channels, spec.kernel_h, spec.kernel_w)
    if w.shape != expected or cin != spec.in_channels:
        raise ShapeError(f"conv2d: weight {w.shape} / input {x.shape} inconsistent with {spec}")
    if b is not None and b.shape != (spec.out_channels,):
        raise ShapeError(f"conv2d: bias shape {b.shape} != ({spec.out_channels},)")
    oh, ow = spec.output_size(h, wd)
    kh, kw, s, ph, pw = spec.kernel_h, spec.kernel_w, spec.stride, spec.pad_h, spec.pad_w

    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw))) if (ph or pw) else x.data
    cols = _windows(xp, kh, kw, s, oh, ow)
    wmat = w.data.reshape(spec.out_channels, -1)
    out = cols @ wmat.T
    if b is not None:
        out += b.data
    out = out.reshape(n, oh, ow, spec.out_channels).transpose(0, 3, 1, 2)

    def grad_fn(g):
        gmat = g.transpose(0, 2, 3, 1).reshape(-1, spec.out_channels)
        gx = gw = gb = None
        if x.requires_grad:
            dcols = gmat @ wmat
            dxp = _scatter(dcols, n, cin, xp.shape[2], xp.shape[3], kh, kw, s, oh, ow)
            gx = dxp[:, :, ph : ph + h, pw : pw + wd]
        if w.requires_grad:
            gw = (gmat.T @ cols).reshape(w.shape)
        if b is not None and b.requires_grad:
            gb = g.sum(axis=(0, 2, 3))
        return gx, gw, gb

    inputs = (x, w) if b is None else (x, w, b)
    return make_op("conv2d", out, inputs, grad_fn)


def conv_transpose2d(x: Tensor, w: Tensor, b: Tensor | None = None, spec: ConvSpec | None = None) -> Tensor:
    """Transposed convolution of ``x[N,Cin,H,W]`` with ``w[Cin,Cout,kh,kw]``.

    Output spatial size is ``(in - 1) * stride - 2 * pad + kernel``.
    """
    spec = _spec_for(w, spec, transposed=True)
    if x.data.ndim != 4:
        raise ShapeError(f"conv_transpose2d expects NCHW input, got {x.shape}")
    n, cin, h, wd = x.shape
    expected = (spec.in_channels, spec.out_channels, spec.kernel_h, spec.kernel_w)
    if w.shape != expected or cin != spec.in_channels:
        raise ShapeError(f"conv_transpose2d: weight {w.shape} / input {x.shape} inconsistent with {spec}")
    if b is not None and b.shape != (spec.out_channels,):
        raise ShapeError(f"conv_transpose2d: bias shape {b.shape} != ({spec.out_channels},)")
    oh, ow = spec.transposed_output_size(h, wd)
    kh, kw, s, ph, pw = spec.kernel_h, spec.kernel_w, spec.stride, spec.pad_h, spec.pad_w
    cout = spec.out_channels
    fh, fw = (h - 1) * s + kh, (wd - 1) * s + kw

    xmat = x.data.transpose(0, 2, 3, 1).reshape(-1, cin)
    wmat = w.data.reshape(cin, -1)
    full = _scatter(xmat @ wmat, n, cout, fh, fw, kh, kw, s, h, wd)
    out = full[:, :, ph : ph + oh, pw : pw + ow]
    if b is not None:
        out = out + b.data[None, :, None, None]

    def grad_fn(g):
        gfull = np.zeros((n, cout, fh, fw), dtype=g.dtype)
        gfull[:, :, ph : ph + oh, pw : pw + ow] = g
        gcols = _windows(gfull, kh, kw, s, h, wd)
        gx = gw = gb = None
        if x.requires_grad:
            gx = (gcols @ wmat.T).reshape(n, h, wd, cin).transpose(0, 3, 1, 2)
        if w.requires_grad:
            gw = (xmat.T @ gcols).reshape(w.shape)
        if b is not None and b.requires_grad:
            gb = g.sum(axis=(0, 2, 3))
        return gx, gw, gb

    inputs = (x, w) if b is None else (x, w, b)
    return make_op("conv_transpose2d", out, inputs, grad_fn)


def maxpool2d(x: Tensor, window: int = 2, stride: int = 2) -> Tensor:
    """Per-window maximum; ties route the gradient to the first element in row-major order."""
    n, c, h, w = x.shape
    if window > h or window > w:
        raise ShapeError(f"pool window {window} larger than input {h}x{w}")
    if h % stride or w % stride:
        raise ShapeError(f"input {h}x{w} not divisible by pool stride {stride}")
    oh, ow = (h - window) // stride + 1, (w - window) // stride + 1
    win = sliding_window_view(x.data, (window, window), axis=(2, 3))
    win = win[:, :, : (oh - 1) * stride + 1 : stride, : (ow - 1) * stride + 1 : stride]
    flat = win.reshape(n, c, oh, ow, window * window)
    arg = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]

    def grad_fn(g):
        gx = np.zeros_like(x.data)
        di, dj = np.divmod(arg, window)
        rows = np.arange(oh)[None, None, :, None] * stride + di
        cols = np.arange(ow)[None, None, None, :] * stride + dj
        nn_ = np.arange(n)[:, None, None, None]
        cc = np.arange(c)[None, :, None, None]
        np.add.at(gx, (nn_, cc, rows, cols), g)
        return (gx,)

    return make_op("maxpool2d", out, (x,), grad_fn)


@dataclass
class BatchNormState:
    """Affine parameters and running statistics of one batch-norm layer.

    ``running_mean`` and ``running_var`` are updated in place during
    training-mode calls.
    """

    gamma: Tensor
    beta: Tensor
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5
    mode: str = "train"

    @classmethod
    def create(cls, channels, dtype=None, **kwargs):
        gamma = Tensor(np.ones(channels), requires_grad=True, dtype=dtype)
        beta = Tensor(np.zeros(channels), requires_grad=True, dtype=dtype)
        return cls(
            gamma,
            beta,
            np.zeros(channels, dtype=gamma.dtype),
            np.ones(channels, dtype=gamma.dtype),
            **kwargs,
        )


def batchnorm2d(x: Tensor, state: BatchNormState) -> Tensor:
    n, c, h, w = x.shape
    if state.gamma.shape != (c,) or state.beta.shape != (c,):
        raise ShapeError(f"batchnorm: {c} channels but gamma {state.gamma.shape}")
    gamma = state.gamma.data.reshape(1, c, 1, 1)
    beta = state.beta.data.reshape(1, c, 1, 1)

    if state.mode == "eval":
        inv = 1.0 / np.sqrt(state.running_var + state.eps)
        mean = state.running_mean.reshape(1, c, 1, 1)
        xhat = (x.data - mean) * inv.reshape(1, c, 1, 1)
        out = (gamma * xhat + beta).astype(x.dtype, copy=False)

        def eval_grad(g):
            return (
                g * (gamma * inv.reshape(1, c, 1, 1)),
                (g * xhat).sum(axis=(0, 2, 3)),
                g.sum(axis=(0, 2, 3)),
            )

        return make_op("batchnorm2d", out, (x, state.gamma, state.beta), eval_grad)

    if state.mode != "train":
        raise ContractError(f"unknown batchnorm mode {state.mode!r}")
    m = n * h * w
    if m < 2:
        raise ContractError("batchnorm in train mode needs at least two values per channel")
    mean = x.data.mean(axis=(0, 2, 3), keepdims=True)
    centered = x.data - mean
    var = (centered * centered).mean(axis=(0, 2, 3), keepdims=True)
    inv = 1.0 / np.sqrt(var + state.eps)
    xhat = centered * inv
    out = gamma * xhat + beta

    mom = state.momentum
    state.running_mean *= 1.0 - mom
    state.running_mean += mom * mean.reshape(c)
    state.running_var *= 1.0 - mom
    state.running_var += mom * var.reshape(c) * (m / (m - 1))

    def train_grad(g):
        ggamma = (g * xhat).sum(axis=(0, 2, 3))
        gbeta = g.sum(axis=(0, 2, 3))
        gxhat = g * gamma
        gx = inv / m * (
            m * gxhat
            - gxhat.sum(axis=(0, 2, 3), keepdims=True)
            - xhat * (gxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
        )
        return gx, ggamma, gbeta

    return make_op("batchnorm2d", out, (x, state.gamma, state.beta), train_grad)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return make_op("relu", np.where(mask, x.data, 0).astype(x.dtype), (x,), lambda g: (g * mask,))


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    if not 0.0 < slope < 1.0:
        raise ContractError(f"leaky_relu slope must lie in (0, 1), got {slope}")
    factor = np.where(x.data > 0, 1.0, slope).astype(x.dtype)
    return make_op("leaky_relu", x.data * factor, (x,), lambda g: (g * factor,))


def stable_sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(x: Tensor) -> Tensor:
    s = stable_sigmoid(x.data)
    return make_op("sigmoid", s, (x,), lambda g: (g * s * (1.0 - s),))


def activation(x: Tensor, kind: str, slope: float = 0.2) -> Tensor:
    """Dispatch to ``relu``, ``leaky_relu`` or ``sigmoid`` by name."""
    if kind == "relu":
        return relu(x)
    if kind == "leaky_relu":
        return leaky_relu(x, slope)
    if kind == "sigmoid":
        return sigmoid(x)
    raise ContractError(f"unknown activation {kind!r}")


def concat_channels(xs) -> Tensor:
    xs = list(xs)
    if not xs:
        raise ShapeError("concat_channels needs at least one tensor")
    n, _, h, w = xs[0].shape
    for t in xs:
        if t.data.ndim != 4 or (t.shape[0], t.shape[2], t.shape[3]) != (n, h, w):
            raise ShapeError(f"concat_channels: {t.shape} incompatible with N={n}, H={h}, W={w}")
    bounds = np.cumsum([0] + [t.shape[1] for t in xs])
    out = np.concatenate([t.data for t in xs], axis=1)

    def grad_fn(g):
        return tuple(np.ascontiguousarray(g[:, bounds[i] : bounds[i + 1]]) for i in range(len(xs)))

    return make_op("concat_channels", out, xs, grad_fn)


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean absolute error; the subgradient at equality is zero."""
    if pred.shape != target.shape:
        raise ShapeError(f"l1_loss: shape mismatch {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    n = diff.size
    value = np.asarray(np.abs(diff).mean(), dtype=pred.dtype)

    def grad_fn(g):
        sgn = np.sign(diff) * (g / n)
        return sgn, -sgn

    return make_op("l1_loss", value, (pred, target), grad_fn)


def bce_with_logits(logits: Tensor, labels) -> Tensor:
    """Binary cross-entropy of ``sigmoid(logits)`` against ``labels``.

    Evaluated as ``max(x, 0) - x*y + log1p(exp(-|x|))`` so it stays finite
    for any finite logit.
    """
    y = labels.data if isinstance(labels, Tensor) else np.asarray(labels, dtype=logits.dtype)
    if y.shape != logits.shape:
        raise ShapeError(f"bce_with_logits: shape mismatch {logits.shape} vs {y.shape}")
    x = logits.data
    n = x.size
    terms = np.maximum(x, 0) - x * y + np.log1p(np.exp(-np.abs(x)))
    value = np.asarray(terms.mean(), dtype=logits.dtype)

    def grad_fn(g):
        gx = (stable_sigmoid(x) - y) * (g / n)
        if isinstance(labels, Tensor):
            return gx, (-x) * (g / n)
        return (gx,)

    inputs = (logits, labels) if isinstance(labels, Tensor) else (logits,)
    return make_op("bce_with_logits", value, inputs, grad_fn)
