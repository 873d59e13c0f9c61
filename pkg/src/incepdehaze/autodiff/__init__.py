"""Minimal reverse-mode automatic differentiation over numpy arrays."""

from .gradcheck import finite_diff_check
from .tensor import (
    Tape,
    Tensor,
    add,
    backward,
    current_tape,
    default_dtype,
    make_op,
    mul,
    ones,
    precision,
    randn,
    reduce_mean,
    reduce_sum,
    reshape,
    scale,
    sub,
    zeros,
)

__all__ = [
    "Tape",
    "Tensor",
    "add",
    "backward",
    "current_tape",
    "default_dtype",
    "finite_diff_check",
    "make_op",
    "mul",
    "ones",
    "precision",
    "randn",
    "reduce_mean",
    "reduce_sum",
    "reshape",
    "scale",
    "sub",
    "zeros",
]
