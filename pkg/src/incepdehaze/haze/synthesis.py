"""Physics-based haze: depth -> transmission -> composited hazy image.

Images are ``H x W x C`` float arrays in [0, 1]; depth and transmission
maps are ``H x W``. Airlight is a single achromatic scalar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._rng import stream
from ..exceptions import ParameterError, ShapeError, ValidationError

BETA_RANGE = (1.8, 3.0)
AIRLIGHT_VALUES = (0.8, 0.85, 0.9, 0.95, 1.0)


@dataclass(frozen=True)
class HazeParams:
    beta: float
    airlight: float

    def validate(self):
        lo, hi = BETA_RANGE
        if not lo <= self.beta <= hi:
            raise ParameterError(f"beta {self.beta} outside [{lo}, {hi}]")
        if self.airlight not in AIRLIGHT_VALUES:
            raise ParameterError(f"airlight {self.airlight} not in {AIRLIGHT_VALUES}")
        return self


def check_depth(depth, require_positive=False):
    d = np.asarray(depth, dtype=np.float64)
    if d.ndim != 2:
        raise ShapeError(f"depth map must be H x W, got {d.shape}")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise ValidationError("depth values must be finite and non-negative")
    if require_positive and not np.any(d > 0):
        raise ValidationError("depth map has no positive value")
    return d


def normalize_depth(depth):
    """Min-max rescale to [0, 1]; a constant map becomes all zeros."""
    d = check_depth(depth, require_positive=True)
    lo, hi = d.min(), d.max()
    if hi == lo:
        return np.zeros_like(d)
    return (d - lo) / (hi - lo)


def transmission_from_depth(depth, beta):
    """``t = exp(-beta * d)`` pointwise."""
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    return np.exp(-float(beta) * check_depth(depth))


def apply_haze(clear, transmission, airlight):
    """Composite ``I = J * t + A * (1 - t)``, one ``t`` shared by all channels."""
    j = np.asarray(clear, dtype=np.float64)
    t = np.asarray(transmission, dtype=np.float64)
    if not 0.0 <= airlight <= 1.0:
        raise ParameterError(f"airlight must lie in [0, 1], got {airlight}")
    if j.ndim == 3:
        if j.shape[:2] != t.shape:
            raise ShapeError(f"image {j.shape} and transmission {t.shape} differ")
        t = t[..., None]
    elif j.shape != t.shape:
        raise ShapeError(f"image {j.shape} and transmission {t.shape} differ")
    out = j * t + airlight * (1.0 - t)
    # rounding must not push the blend outside its endpoints
    return np.clip(out, np.minimum(j, airlight), np.maximum(j, airlight))


def invert_haze(hazy, transmission, airlight):
    """Closed-form recovery ``J = (I - A * (1 - t)) / t`` for ``t > 0``."""
    i = np.asarray(hazy, dtype=np.float64)
    t = np.asarray(transmission, dtype=np.float64)
    if i.ndim == 3:
        t = t[..., None]
    return (i - airlight * (1.0 - t)) / t


def sample_params(rng) -> HazeParams:
    """Draw beta ~ U[1.8, 3.0] and airlight uniformly from the five levels."""
    beta = float(rng.uniform(*BETA_RANGE))
    airlight = AIRLIGHT_VALUES[int(rng.integers(len(AIRLIGHT_VALUES)))]
    return HazeParams(beta, airlight)


def variant_stream(seed, image_id, variant_index):
    return stream(seed, str(image_id), int(variant_index))


def synthesize_variants(clear, depth, k=3, seed=0, image_id=""):
    """``k`` hazy renderings of one clear image, each with its own parameters.

    Variant ``i`` draws its parameters from the stream keyed by
    ``(seed, image_id, i)``, so any single variant can be regenerated on its
    own.
    """
    if k < 1:
        raise ParameterError(f"k must be at least 1, got {k}")
    j = np.asarray(clear, dtype=np.float64)
    d = check_depth(depth)
    if j.shape[:2] != d.shape:
        raise ShapeError(f"clear image {j.shape} and depth {d.shape} differ")
    dn = normalize_depth(d)
    out = []
    for i in range(k):
        params = sample_params(variant_stream(seed, image_id, i))
        t = transmission_from_depth(dn, params.beta)
        out.append((apply_haze(j, t, params.airlight), params))
    return out


def replay_variant(clear, depth, params: HazeParams):
    """Recompute a variant from stored inputs and recorded parameters."""
    t = transmission_from_depth(normalize_depth(depth), params.beta)
    return apply_haze(clear, t, params.airlight)


def synthetic_depth(height, width, kind="ramp", seed=0):
    """Analytic depth fields in [0, 1] for fixtures.

    ``ramp`` increases linearly left to right; ``radial`` grows with
    distance from the image centre; ``random`` is a smooth seeded field
    (sum of low-frequency cosines) rescaled to [0, 1].
    """
    if height <= 0 or width <= 0:
        raise ShapeError("depth dimensions must be positive")
    if kind == "ramp":
        row = np.linspace(0.0, 1.0, width) if width > 1 else np.zeros(1)
        return np.tile(row, (height, 1))
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    if kind == "radial":
        r = np.hypot(yy - (height - 1) / 2.0, xx - (width - 1) / 2.0)
        return normalize_depth(r)
    if kind == "random":
        rng = stream(seed, "synthetic_depth")
        field = np.zeros((height, width))
        for _ in range(6):
            fy, fx = rng.uniform(0.2, 2.0, size=2)
            phase = rng.uniform(0, 2 * np.pi)
            field += np.cos(2 * np.pi * (fy * yy / height + fx * xx / width) + phase)
        return normalize_depth(field - field.min())
    raise ValueError(f"unknown depth kind {kind!r}")
