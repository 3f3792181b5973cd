"""Filtered back-projection for parallel-beam sinograms."""

from __future__ import annotations

import enum

import numpy as np

from .projector import Geometry, pixel_centers

__all__ = ["FilterKind", "ramp_filter", "filter_sinogram", "fbp"]


class FilterKind(str, enum.Enum):
    RAM_LAK = "ramlak"
    SHEPP_LOGAN = "shepp-logan"


def _next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


def ramp_filter(num_detectors: int, spacing: float = 1.0,
                kind: FilterKind = FilterKind.RAM_LAK) -> np.ndarray:
    """Frequency response of the band-limited ramp on the padded grid.

    The kernel is sampled in the spatial domain (``1/4`` at the origin,
    ``-1/(pi n)^2`` at odd lags) before the FFT, which keeps the DC term right.
    """
    size = max(64, _next_pow2(2 * num_detectors))
    lags = np.concatenate([np.arange(0, size // 2), np.arange(-size // 2, 0)])
    kernel = np.zeros(size)
    kernel[0] = 0.25
    odd = lags % 2 == 1
    kernel[odd] = -1.0 / (np.pi * lags[odd]) ** 2
    response = np.real(np.fft.fft(kernel)) / spacing
    if FilterKind(kind) is FilterKind.SHEPP_LOGAN:
        response = response * np.sinc(np.fft.fftfreq(size))
    return response


def filter_sinogram(sino: np.ndarray, geom: Geometry,
                    kind: FilterKind = FilterKind.RAM_LAK) -> np.ndarray:
    response = ramp_filter(geom.num_detectors, geom.detector_spacing, kind)
    padded = np.zeros((sino.shape[0], len(response)))
    padded[:, : geom.num_detectors] = sino
    out = np.real(np.fft.ifft(np.fft.fft(padded, axis=1) * response, axis=1))
    return out[:, : geom.num_detectors]


def fbp(sino: np.ndarray, geom: Geometry,
        filter: FilterKind = FilterKind.RAM_LAK) -> np.ndarray:
    """Ramp-filter every view, then smear it back across the image grid."""
    sino = np.asarray(sino, dtype=np.float64)
    if sino.shape != geom.sinogram_shape:
        raise ValueError(
            f"sinogram has shape {sino.shape}, geometry expects {geom.sinogram_shape}"
        )
    q = filter_sinogram(sino, geom, filter)
    x, y = pixel_centers(geom.image_size)
    det = geom.detector_positions
    img = np.zeros(geom.image_shape)
    for view, theta in enumerate(geom.angles):
        s = x * np.cos(theta) + y * np.sin(theta)
        img += np.interp(s, det, q[view], left=0.0, right=0.0)
    img *= np.pi / geom.num_views
    return np.nan_to_num(img, nan=0.0, posinf=0.0, neginf=0.0)
