"""Dense tensors and a define-by-run tape for reverse-mode differentiation.

Operations only record themselves when a :class:`Tape` is active *and* at
least one input requires a gradient. Values computed outside a tape are
identical to values computed inside one; the tape only adds bookkeeping.

Typical use::

    x = Tensor(np.ones(4), requires_grad=True)
    with Tape() as tape:
        loss = reduce_mean(x)
    backward(loss, tape)
    x.grad  # -> [0.25, 0.25, 0.25, 0.25]
"""

from __future__ import annotations

import contextlib
import threading
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .._rng import stream
from ..exceptions import ContractError, ShapeError

_local = threading.local()


def _state():
    if not hasattr(_local, "tapes"):
        _local.tapes = []
        _local.dtype = np.float32
    return _local


def default_dtype():
    """Floating dtype used when tensors are built from Python data."""
    return _state().dtype


@contextlib.contextmanager
def precision(dtype):
    """Temporarily switch the default dtype (``float32`` or ``float64``)."""
    dtype = np.dtype(dtype).type
    if dtype not in (np.float32, np.float64):
        raise ValueError(f"unsupported precision {dtype!r}")
    st = _state()
    previous = st.dtype
    st.dtype = dtype
    try:
        yield
    finally:
        st.dtype = previous


class Tensor:
    """N-dimensional float array with an optional gradient buffer.

    ``data`` is a C-contiguous numpy array; ``grad`` is ``None`` until a
    backward pass reaches the tensor, after which it has the same shape.
    """

    __slots__ = ("data", "requires_grad", "grad", "name", "__weakref__")

    def __init__(self, data, requires_grad=False, dtype=None, name=None):
        dtype = dtype or default_dtype()
        arr = np.ascontiguousarray(np.asarray(data, dtype=dtype))
        if arr.ndim == 0:
            arr = arr.reshape(())
        if not np.issubdtype(arr.dtype, np.floating):
            raise TypeError("Tensor data must be floating point")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name

    @classmethod
    def _wrap(cls, arr, requires_grad=False):
        t = cls.__new__(cls)
        t.data = np.ascontiguousarray(arr)
        t.requires_grad = requires_grad
        t.grad = None
        t.name = None
        return t

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return self.data.item()

    def numpy(self):
        return self.data.copy()

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor._wrap(self.data, requires_grad=False)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    def __add__(self, other):
        return add(self, _as_tensor(other, self))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _as_tensor(other, self))

    def __rsub__(self, other):
        return sub(_as_tensor(other, self), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)


def _as_tensor(value, like):
    if isinstance(value, Tensor):
        return value
    return Tensor._wrap(np.full(like.shape, value, dtype=like.dtype))


@dataclass
class _Record:
    name: str
    inputs: tuple
    output: Tensor
    backward: Callable


class Tape:
    """Ordered log of differentiable operations for one forward pass.

    Tapes are thread-confined; opening one on a thread makes it the target
    for every op executed on that thread until the ``with`` block exits.
    """

    def __init__(self):
        self.records: list[_Record] = []

    def __enter__(self):
        _state().tapes.append(self)
        return self

    def __exit__(self, *exc):
        tapes = _state().tapes
        if not tapes or tapes[-1] is not self:
            raise RuntimeError("tape stack corrupted")
        tapes.pop()
        return False

    def __len__(self):
        return len(self.records)

    def record(self, name, inputs, output, backward):
        self.records.append(_Record(name, tuple(inputs), output, backward))

    def first_nonfinite(self):
        """Name and index of the first recorded op whose output is not finite."""
        for i, rec in enumerate(self.records):
            if not np.all(np.isfinite(rec.output.data)):
                return i, rec.name
        return None


def current_tape() -> Optional[Tape]:
    tapes = _state().tapes
    return tapes[-1] if tapes else None


def make_op(name, data, inputs: Sequence[Tensor], backward):
    """Wrap ``data`` as an op output and record it when a gradient is needed.

    ``backward(grad_out)`` must return one gradient (or ``None``) per input.
    """
    tape = current_tape()
    needs = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor._wrap(data, requires_grad=needs)
    if needs:
        tape.record(name, inputs, out, backward)
    return out


def backward(loss: Tensor, tape: Tape):
    """Propagate d(loss)/d(.) to every tensor recorded on ``tape``.

    Leaf gradients accumulate into existing ``grad`` buffers; callers zero
    them between optimisation steps. Intermediate tensors receive their
    gradient for this pass only.
    """
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    produced = {id(rec.output) for rec in tape.records}
    grads = {id(loss): np.ones_like(loss.data)}
    tensors = {id(loss): loss}
    for rec in reversed(tape.records):
        g = grads.pop(id(rec.output), None)
        if g is None:
            continue
        rec.output.grad = g
        in_grads = rec.backward(g)
        for inp, gi in zip(rec.inputs, in_grads):
            if gi is None or not inp.requires_grad:
                continue
            if gi.shape != inp.shape:
                raise ShapeError(
                    f"{rec.name}: gradient shape {gi.shape} != input shape {inp.shape}"
                )
            key = id(inp)
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = gi
                tensors[key] = inp
    for key, g in grads.items():
        t = tensors[key]
        if key in produced or not t.requires_grad:
            continue
        g = g.astype(t.dtype, copy=False)
        t.grad = g.copy() if t.grad is None else t.grad + g


# ---------------------------------------------------------------------------
# construction


def _check_shape(shape):
    shape = tuple(int(s) for s in shape)
    if any(s <= 0 for s in shape):
        raise ShapeError(f"all extents must be positive, got {shape}")
    return shape


def zeros(shape, requires_grad=False, dtype=None):
    shape = _check_shape(shape)
    return Tensor(np.zeros(shape, dtype=dtype or default_dtype()), requires_grad)


def ones(shape, requires_grad=False, dtype=None):
    shape = _check_shape(shape)
    return Tensor(np.ones(shape, dtype=dtype or default_dtype()), requires_grad)


def randn(shape, seed, stddev=1.0, requires_grad=False, dtype=None):
    """Normal samples, bitwise deterministic in ``(shape, seed)``."""
    shape = _check_shape(shape)
    values = stream(seed).standard_normal(shape) * stddev
    return Tensor(values.astype(dtype or default_dtype()), requires_grad)


# ---------------------------------------------------------------------------
# elementwise arithmetic


def _same_shape(name, a, b):
    if a.shape != b.shape:
        raise ShapeError(f"{name}: shape mismatch {a.shape} vs {b.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("add", a, b)
    return make_op("add", a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("sub", a, b)
    return make_op("sub", a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("mul", a, b)
    return make_op("mul", a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def scale(a: Tensor, s: float) -> Tensor:
    s = float(s)
    return make_op("scale", a.data * a.dtype.type(s), (a,), lambda g: (g * g.dtype.type(s),))


def reduce_sum(a: Tensor) -> Tensor:
    if a.size == 0:
        raise ShapeError("reduce_sum of an empty tensor")
    return make_op(
        "reduce_sum",
        np.asarray(a.data.sum(), dtype=a.dtype),
        (a,),
        lambda g: (np.full(a.shape, g, dtype=a.dtype),),
    )


def reduce_mean(a: Tensor) -> Tensor:
    if a.size == 0:
        raise ShapeError("reduce_mean of an empty tensor")
    n = a.size
    return make_op(
        "reduce_mean",
        np.asarray(a.data.mean(), dtype=a.dtype),
        (a,),
        lambda g: (np.full(a.shape, g / n, dtype=a.dtype),),
    )


def reshape(a: Tensor, shape) -> Tensor:
    return make_op(
        "reshape", a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),)
    )
