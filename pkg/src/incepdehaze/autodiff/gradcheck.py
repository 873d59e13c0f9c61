"""Central-difference verification of analytic gradients."""

import numpy as np

from ..exceptions import ContractError
from .tensor import Tape, Tensor, backward


def finite_diff_check(f, x, eps=1e-6, indices=None):
    """Largest relative disagreement between backprop and central differences.

    Parameters
    ----------
    f : callable
        Maps the tensor(s) in ``x`` to a scalar :class:`Tensor`. Must be
        deterministic.
    x : Tensor or sequence of Tensor
        Inputs to differentiate with respect to. Must be ``float64``.
    eps : float
        Half-width of the central difference.
    indices : sequence of (input_index, flat_index), optional
        Restrict the comparison to these coordinates. Defaults to every
        element of every input.

    Returns
    -------
    float
        ``max |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)``.
    """
    xs = [x] if isinstance(x, Tensor) else list(x)
    for t in xs:
        if t.dtype != np.float64:
            raise ContractError("finite_diff_check requires float64 inputs")
    saved = [t.requires_grad for t in xs]
    for t in xs:
        t.requires_grad = True
        t.grad = None
    try:
        with Tape() as tape:
            out = f(*xs)
        if out.size != 1:
            raise ContractError("finite_diff_check needs a scalar-valued f")
        backward(out, tape)
        analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in xs]

        if indices is None:
            indices = [(i, j) for i, t in enumerate(xs) for j in range(t.size)]

        worst = 0.0
        for i, j in indices:
            flat = xs[i].data.reshape(-1)
            orig = flat[j]
            flat[j] = orig + eps
            f_plus = f(*xs).item()
            flat[j] = orig - eps
            f_minus = f(*xs).item()
            flat[j] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = analytic[i].reshape(-1)[j]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
        return worst
    finally:
        for t, flag in zip(xs, saved):
            t.requires_grad = flag
            t.grad = None
