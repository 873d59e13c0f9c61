"""Input checks shared by the estimators and the CLI."""

import numpy as np

from .exceptions import ShapeError, ValidationError


def check_image(img, name="image"):
    """Return ``img`` as a float64 ``H x W x C`` array with values in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[..., None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ShapeError(f"{name} must be H x W x 1 or H x W x 3, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValidationError(f"{name} values must lie in [0, 1]")
    return arr


def check_image_batch(X, name="X", channels=3):
    """Return ``X`` as a float64 ``N x H x W x C`` batch with values in [0, 1]."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 3 and channels == 3 and arr.shape[-1] == 3:
        arr = arr[None]
    if arr.ndim != 4 or arr.shape[-1] != channels:
        raise ShapeError(f"{name} must be N x H x W x {channels}, got {arr.shape}")
    if arr.shape[0] == 0:
        raise ValidationError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValidationError(f"{name} values must lie in [0, 1]")
    return arr


def check_paired(X, y):
    X = check_image_batch(X, "X")
    y = check_image_batch(y, "y")
    if X.shape != y.shape:
        raise ShapeError(f"X {X.shape} and y {y.shape} must match")
    return X, y


def to_nchw(batch):
    return np.ascontiguousarray(batch.transpose(0, 3, 1, 2))


def to_nhwc(batch):
    return np.ascontiguousarray(batch.transpose(0, 2, 3, 1))
