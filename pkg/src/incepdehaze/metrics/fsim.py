"""Feature similarity (FSIM) on luma.

Phase congruency uses a log-Gabor bank of 4 scales x 4 orientations
(minimum wavelength 6, scale factor 2, sigma_f 0.55, angular spread
pi / 4 / 1.2) with Kovesi's noise compensation (k = 2). Gradient magnitude
uses the 3x3 Scharr pair. Everything runs on the [0, 255] intensity scale
with T1 = 0.85 and T2 = 160.
"""

import math

import numpy as np
from scipy.signal import convolve2d

from ..exceptions import ShapeError
from .quality import luma

T1 = 0.85
T2 = 160.0

SCHARR_X = np.array([[3.0, 0.0, -3.0], [10.0, 0.0, -10.0], [3.0, 0.0, -3.0]]) / 16.0
SCHARR_Y = SCHARR_X.T.copy()


def _freq_range(n):
    if n % 2:
        return np.arange(-(n - 1) / 2, (n - 1) / 2 + 1) / max(n - 1, 1)
    return np.arange(-n / 2, n / 2) / n


def _polar_grid(rows, cols):
    x, y = np.meshgrid(_freq_range(cols), _freq_range(rows))
    return np.sqrt(x * x + y * y), np.arctan2(-y, x)


def lowpass_filter(rows, cols, cutoff=0.45, order=15):
    radius, _ = _polar_grid(rows, cols)
    return np.fft.ifftshift(1.0 / (1.0 + (radius / cutoff) ** (2 * order)))


def phase_congruency(img, nscale=4, norient=4, min_wavelength=6, mult=2.0, sigma_onf=0.55,
                     d_theta_on_sigma=1.2, k=2.0, epsilon=1e-4):
    """Phase congruency map of a 2-D array (values in [0, 1])."""
    img = np.asarray(img, dtype=np.float64)
    rows, cols = img.shape
    image_fft = np.fft.fft2(img)
    theta_sigma = math.pi / norient / d_theta_on_sigma

    radius, theta = _polar_grid(rows, cols)
    radius = np.fft.ifftshift(radius)
    theta = np.fft.ifftshift(theta)
    radius[0, 0] = 1.0
    sintheta, costheta = np.sin(theta), np.cos(theta)

    lp = lowpass_filter(rows, cols)
    log_gabor = []
    for s in range(nscale):
        fo = 1.0 / (min_wavelength * mult**s)
        lg = np.exp(-(np.log(radius / fo) ** 2) / (2.0 * math.log(sigma_onf) ** 2)) * lp
        lg[0, 0] = 0.0
        log_gabor.append(lg)

    energy_all = np.zeros((rows, cols))
    an_all = np.zeros((rows, cols))
    for o in range(norient):
        angl = o * math.pi / norient
        ds = sintheta * math.cos(angl) - costheta * math.sin(angl)
        dc = costheta * math.cos(angl) + sintheta * math.sin(angl)
        spread = np.exp(-(np.abs(np.arctan2(ds, dc)) ** 2) / (2.0 * theta_sigma**2))

        sum_e = np.zeros((rows, cols))
        sum_o = np.zeros((rows, cols))
        sum_an = np.zeros((rows, cols))
        eo = []
        ifft_filters = []
        em_n = 0.0
        for s in range(nscale):
            filt = log_gabor[s] * spread
            ifft_filters.append(np.real(np.fft.ifft2(filt)) * math.sqrt(rows * cols))
            resp = np.fft.ifft2(image_fft * filt)
            eo.append(resp)
            sum_an += np.abs(resp)
            sum_e += resp.real
            sum_o += resp.imag
            if s == 0:
                em_n = float(np.sum(filt * filt))

        x_energy = np.sqrt(sum_e**2 + sum_o**2) + epsilon
        mean_e = sum_e / x_energy
        mean_o = sum_o / x_energy
        energy = np.zeros((rows, cols))
        for resp in eo:
            e, od = resp.real, resp.imag
            energy += e * mean_e + od * mean_o - np.abs(e * mean_o - od * mean_e)

        # noise threshold from the smallest-scale response amplitude
        median_e2n = float(np.median(np.abs(eo[0]) ** 2))
        mean_e2n = -median_e2n / math.log(0.5)
        noise_power = mean_e2n / em_n if em_n > 0 else 0.0
        est_sum_an2 = sum(f * f for f in ifft_filters)
        est_sum_aiaj = np.zeros((rows, cols))
        for si in range(nscale - 1):
            for sj in range(si + 1, nscale):
                est_sum_aiaj += ifft_filters[si] * ifft_filters[sj]
        est_noise_energy2 = 2 * noise_power * float(np.sum(est_sum_an2)) + 4 * noise_power * float(np.sum(est_sum_aiaj))
        tau = math.sqrt(max(est_noise_energy2, 0.0) / 2.0)
        est_noise_energy = tau * math.sqrt(math.pi / 2.0)
        est_noise_sigma = math.sqrt((2.0 - math.pi / 2.0) * tau**2)
        threshold = (est_noise_energy + k * est_noise_sigma) / 1.7

        energy_all += np.maximum(energy - threshold, 0.0)
        an_all += sum_an

    pc = np.zeros_like(energy_all)
    np.divide(energy_all, an_all, out=pc, where=an_all > 0)
    return pc


def _downsample(y, factor):
    if factor == 1:
        return y
    kernel = np.full((factor, factor), 1.0 / factor**2)
    full = convolve2d(y, kernel, mode="full")
    r0 = factor // 2
    same = full[r0 : r0 + y.shape[0], r0 : r0 + y.shape[1]]
    return same[::factor, ::factor]


def gradient_magnitude(y):
    gx = convolve2d(y, SCHARR_X, mode="same")
    gy = convolve2d(y, SCHARR_Y, mode="same")
    return np.sqrt(gx * gx + gy * gy)


def fsim(a, b):
    """FSIM between two images in [0, 1] (``H x W`` or ``H x W x C``)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    y1 = luma(a) * 255.0
    y2 = luma(b) * 255.0
    rows, cols = y1.shape
    factor = max(1, int(math.floor(min(rows, cols) / 256.0 + 0.5)))
    y1, y2 = _downsample(y1, factor), _downsample(y2, factor)

    pc1, pc2 = phase_congruency(y1), phase_congruency(y2)
    g1, g2 = gradient_magnitude(y1), gradient_magnitude(y2)

    pc_sim = (2.0 * (pc1 * pc2) + T1) / (pc1 * pc1 + pc2 * pc2 + T1)
    g_sim = (2.0 * (g1 * g2) + T2) / (g1 * g1 + g2 * g2 + T2)
    pc_max = np.maximum(pc1, pc2)
    sim = g_sim * pc_sim
    weight = float(np.sum(pc_max))
    if weight == 0.0:
        # featureless pair: no phase-congruency weights, fall back to a plain mean
        return float(np.mean(sim))
    return float(np.sum(sim * pc_max) / weight)
