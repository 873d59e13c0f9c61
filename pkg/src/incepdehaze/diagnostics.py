"""Finite-difference verification suite over every differentiable op.

Each case differentiates ``sum(R * op(x))`` for a fixed random ``R`` so
that true gradients are O(1) and the relative-error metric is not swamped
by entries whose exact gradient is ~0. Inputs to piecewise-linear ops are
kept at least ``10 * eps`` away from their kinks and ties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import nn
from .model import GeneratorConfig, generator_forward, init_generator, inception_block
from .model.params import _Initializer, _init_inception

OP_TOLERANCE = 1e-4
END_TO_END_TOLERANCE = 1e-3


@dataclass(frozen=True)
class GradcheckResult:
    name: str
    max_rel_error: float
    threshold: float

    @property
    def passed(self):
        return self.max_rel_error < self.threshold


def _t(arr):
    return ad.Tensor(arr, dtype=np.float64)


def _projected(op, out_shape, rng):
    r = _t(rng.standard_normal(out_shape))

    def f(*xs):
        return ad.reduce_sum(ad.mul(op(*xs), r))

    return f


def _away_from_zero(rng, shape, margin=0.05):
    x = rng.standard_normal(shape)
    return np.where(np.abs(x) < margin, np.sign(x + 1e-12) * margin + x, x)


def _distinct(rng, shape, spacing=1e-3):
    # a random permutation of an evenly spaced grid: no two values within `spacing`
    n = int(np.prod(shape))
    return (rng.permutation(n) * spacing - n * spacing / 2).reshape(shape)


def op_cases(rng):
    """Yield ``(name, f, inputs)`` triples for every primitive."""
    a, b = _t(rng.standard_normal((2, 3, 4))), _t(rng.standard_normal((2, 3, 4)))
    yield "add", _projected(ad.add, a.shape, rng), [a, b]
    yield "sub", _projected(ad.sub, a.shape, rng), [a, b]
    yield "mul", _projected(ad.mul, a.shape, rng), [a, b]
    yield "scale", _projected(lambda x: ad.scale(x, -1.7), a.shape, rng), [a]
    yield "reduce_mean", ad.reduce_mean, [a]
    yield "reduce_sum", ad.reduce_sum, [a]

    x = _t(rng.standard_normal((2, 4, 8, 8)))
    for label, spec in [
        ("3x3/s1/p1", nn.ConvSpec(4, 3, 3, 3, 1, 1, 1)),
        ("3x3/s2/p0", nn.ConvSpec(4, 3, 3, 3, 2, 0, 0)),
        ("1x3/s1/p(0,1)", nn.ConvSpec(4, 3, 1, 3, 1, 0, 1)),
        ("4x4/s2/p1", nn.ConvSpec(4, 3, 4, 4, 2, 1, 1)),
    ]:
        w = _t(rng.standard_normal((3, 4, spec.kernel_h, spec.kernel_w)))
        bias = _t(rng.standard_normal(3))
        out_shape = (2, 3) + spec.output_size(8, 8)
        op = lambda x, w, b, spec=spec: nn.conv2d(x, w, b, spec)
        yield f"conv2d[{label}]", _projected(op, out_shape, rng), [x, w, bias]

    xs = _t(rng.standard_normal((2, 4, 4, 4)))
    for label, spec in [
        ("2x2/s2", nn.ConvSpec(4, 3, 2, 2, 2, 0, 0)),
        ("4x4/s2/p1", nn.ConvSpec(4, 3, 4, 4, 2, 1, 1)),
        ("3x3/s1/p1", nn.ConvSpec(4, 3, 3, 3, 1, 1, 1)),
    ]:
        w = _t(rng.standard_normal((4, 3, spec.kernel_h, spec.kernel_w)))
        bias = _t(rng.standard_normal(3))
        out_shape = (2, 3) + spec.transposed_output_size(4, 4)
        op = lambda x, w, b, spec=spec: nn.conv_transpose2d(x, w, b, spec)
        yield f"conv_transpose2d[{label}]", _projected(op, out_shape, rng), [xs, w, bias]

    xp = _t(_distinct(rng, (2, 4, 8, 8)))
    yield "maxpool2d", _projected(nn.maxpool2d, (2, 4, 4, 4), rng), [xp]

    gamma, beta = _t(rng.standard_normal(4)), _t(rng.standard_normal(4))

    def bn_train(x, g, b):
        return nn.batchnorm2d(x, nn.BatchNormState(g, b, np.zeros(4), np.ones(4)))

    def bn_eval(x, g, b):
        state = nn.BatchNormState(g, b, np.full(4, 0.3), np.full(4, 1.7), mode="eval")
        return nn.batchnorm2d(x, state)

    yield "batchnorm2d[train]", _projected(bn_train, x.shape, rng), [x, gamma, beta]
    yield "batchnorm2d[eval]", _projected(bn_eval, x.shape, rng), [x, gamma, beta]

    xk = _t(_away_from_zero(rng, (2, 4, 8, 8)))
    yield "relu", _projected(nn.relu, xk.shape, rng), [xk]
    yield "leaky_relu", _projected(lambda x: nn.leaky_relu(x, 0.2), xk.shape, rng), [xk]
    yield "sigmoid", _projected(nn.sigmoid, x.shape, rng), [x]

    c1, c2 = _t(rng.standard_normal((2, 1, 4, 4))), _t(rng.standard_normal((2, 2, 4, 4)))
    yield "concat_channels", _projected(lambda p, q: nn.concat_channels([p, q]), (2, 3, 4, 4), rng), [c1, c2]

    target = _t(rng.standard_normal((2, 3, 4, 4)))
    pred = _t(target.data + _away_from_zero(rng, target.shape))
    yield "l1_loss", lambda p: nn.l1_loss(p, target), [pred]

    labels = (rng.random((2, 1, 4, 4)) > 0.5).astype(np.float64)
    logits = _t(3.0 * rng.standard_normal((2, 1, 4, 4)))
    yield "bce_with_logits", lambda z: nn.bce_with_logits(z, labels), [logits]

    init = _Initializer(seed=int(rng.integers(2**31)), stddev=0.5, dtype=np.float64)
    _init_inception(init, "inc", 4, 8)
    names = sorted(init.tensors)
    xi = _t(rng.standard_normal((1, 4, 6, 6)))

    def inception(x, *ws):
        return inception_block(x, dict(zip(names, ws)), "inc")

    yield "inception_block", _projected(inception, (1, 8, 6, 6), rng), [xi] + [init.tensors[n] for n in names]


def end_to_end_case(rng, n_params=50):
    """L1 of a width-4, one-stage generator on a 1x3x8x8 input, sampled over parameters."""
    cfg = GeneratorConfig(base_width=4, num_stages=1)
    params = init_generator(cfg, seed=int(rng.integers(2**31)), stddev=0.5, dtype=np.float64)
    names = sorted(params.tensors)
    tensors = [params[n] for n in names]
    x = _t(rng.random((1, 3, 8, 8)))
    target = _t(rng.random((1, 3, 8, 8)))

    def f(*ts):
        return nn.l1_loss(generator_forward(x, dict(zip(names, ts)), cfg), target)

    flat = [(i, j) for i, t in enumerate(tensors) for j in range(t.size)]
    pick = rng.choice(len(flat), size=min(n_params, len(flat)), replace=False)
    return f, tensors, [flat[k] for k in sorted(pick)]


def run_gradcheck_suite(seed=0, eps=1e-6):
    rng = np.random.default_rng(seed)
    results = []
    with ad.precision(np.float64):
        for name, f, inputs in op_cases(rng):
            results.append(GradcheckResult(name, ad.finite_diff_check(f, inputs, eps), OP_TOLERANCE))
        f, tensors, indices = end_to_end_case(rng)
        err = ad.finite_diff_check(f, tensors, eps, indices=indices)
        results.append(GradcheckResult("generator[end-to-end]", err, END_TO_END_TOLERANCE))
    return results


def format_table(results):
    width = max(len(r.name) for r in results)
    lines = [f"{'op'.ljust(width)}  max_rel_error  threshold  status"]
    for r in results:
        status = "ok" if r.passed else "FAIL"
        lines.append(f"{r.name.ljust(width)}  {r.max_rel_error:13.3e}  {r.threshold:9.0e}  {status}")
    return "\n".join(lines)
