"""Full-reference image quality: PSNR and SSIM, plus per-directory reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from ..exceptions import ContractError, ShapeError

REC601 = np.array([0.299, 0.587, 0.114])


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def luma(img):
    """Rec.601 luma of an ``H x W x 3`` image; ``H x W`` / ``H x W x 1`` pass through."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 1:
        return img[..., 0]
    if img.ndim == 3 and img.shape[2] == 3:
        return img @ REC601
    raise ShapeError(f"expected H x W, H x W x 1 or H x W x 3, got {img.shape}")


def psnr(a, b, peak=1.0):
    """Peak signal-to-noise ratio in dB over all pixels and channels.

    Identical inputs give ``math.inf``.
    """
    a, b = _pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def gaussian_window(size=11, sigma=1.5):
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def ssim_map(a, b, data_range=1.0, size=11, sigma=1.5):
    """Local SSIM over every fully-contained ``size x size`` window (valid region)."""
    a, b = _pair(luma(a), luma(b))
    if min(a.shape) < size:
        raise ContractError(f"image {a.shape} smaller than the {size}x{size} SSIM window")
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    g = gaussian_window(size, sigma)
    r = size // 2

    def blur(x):
        y = correlate1d(x, g, axis=0, mode="constant")
        y = correlate1d(y, g, axis=1, mode="constant")
        return y[r : x.shape[0] - r, r : x.shape[1] - r]

    mu_a, mu_b = blur(a), blur(b)
    var_a = blur(a * a) - mu_a * mu_a
    var_b = blur(b * b) - mu_b * mu_b
    cov = blur(a * b) - mu_a * mu_b
    num = (2.0 * (mu_a * mu_b) + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a, b, data_range=1.0):
    """Mean structural similarity; 3-channel inputs are compared on luma."""
    return float(np.mean(ssim_map(a, b, data_range)))


@dataclass
class QualityReport:
    """Per-image scores plus their aggregates.

    Infinite PSNR values (identical pairs) are kept per image but left out of
    the PSNR mean; ``psnr_inf_count`` records how many were excluded.
    """

    names: list = field(default_factory=list)
    psnr: list = field(default_factory=list)
    ssim: list = field(default_factory=list)
    fsim: list = field(default_factory=list)

    @property
    def count(self):
        return len(self.names)

    @property
    def psnr_inf_count(self):
        return sum(1 for v in self.psnr if math.isinf(v))

    @property
    def mean_psnr(self):
        finite = [v for v in self.psnr if math.isfinite(v)]
        if finite:
            return float(np.mean(finite))
        return math.inf if self.psnr else math.nan

    @property
    def mean_ssim(self):
        return float(np.mean(self.ssim)) if self.ssim else math.nan

    @property
    def mean_fsim(self):
        return float(np.mean(self.fsim)) if self.fsim else math.nan

    def add(self, name, a, b, with_fsim=True):
        from .fsim import fsim as _fsim

        self.names.append(name)
        self.psnr.append(psnr(a, b))
        self.ssim.append(ssim(a, b))
        if with_fsim:
            self.fsim.append(_fsim(a, b))

    def to_dict(self):
        def fmt(v):
            return "inf" if isinstance(v, float) and math.isinf(v) else v

        return {
            "count": self.count,
            "psnr": fmt(self.mean_psnr),
            "ssim": self.mean_ssim,
            "fsim": self.mean_fsim if self.fsim else None,
            "psnr_inf_count": self.psnr_inf_count,
            "per_image": [
                {
                    "name": n,
                    "psnr": fmt(p),
                    "ssim": s,
                    "fsim": self.fsim[i] if self.fsim else None,
                }
                for i, (n, p, s) in enumerate(zip(self.names, self.psnr, self.ssim))
            ],
        }
