"""Image quality metrics: PSNR, single-scale SSIM and histogram entropy."""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import correlate1d

__all__ = ["psnr", "ssim", "entropy", "gaussian_window"]


def _same_shape(x, ref):
    x = np.asarray(x, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if x.shape != ref.shape:
        raise ValueError(f"image shapes differ: {x.shape} vs {ref.shape}")
    return x, ref


def psnr(x, ref, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical images."""
    if not peak > 0:
        raise ValueError(f"peak must be positive, got {peak}")
    x, ref = _same_shape(x, ref)
    mse = float(np.mean((x - ref) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-(r**2) / (2 * sigma**2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    half = len(g) // 2
    out = correlate1d(img, g, axis=0, mode="constant")
    out = correlate1d(out, g, axis=1, mode="constant")
    return out[half:-half, half:-half]


def ssim(x, ref, data_range: float | None = None, win_size: int = 11,
         sigma: float = 1.5, k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean structural similarity over all fully-contained Gaussian windows.

    ``data_range`` defaults to ``ref.max() - ref.min()``; a constant reference
    falls back to 1 so the stabilising constants stay positive.
    """
    x, ref = _same_shape(x, ref)
    if min(x.shape) < win_size:
        raise ValueError(f"images smaller than the {win_size}x{win_size} window")
    if data_range is None:
        data_range = float(ref.max() - ref.min()) or 1.0
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    g = gaussian_window(win_size, sigma)

    mu_x = _filter_valid(x, g)
    mu_y = _filter_valid(ref, g)
    sxx = _filter_valid(x * x, g) - mu_x * mu_x
    syy = _filter_valid(ref * ref, g) - mu_y * mu_y
    sxy = _filter_valid(x * ref, g) - mu_x * mu_y

    num = (2 * mu_x * mu_y + c1) * (2 * sxy + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def entropy(x, bins: int = 256) -> float:
    """Shannon entropy (bits) of the pixel histogram over ``[min, max]``."""
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    x = np.asarray(x, dtype=np.float64).ravel()
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        return 0.0
    # bin by index so that affine rescaling of x maps to identical bins
    idx = np.floor((x - lo) / (hi - lo) * bins).astype(np.int64)
    counts = np.bincount(np.clip(idx, 0, bins - 1), minlength=bins)
    q = counts[counts > 0] / x.size
    return float(-(q * np.log2(q)).sum())
