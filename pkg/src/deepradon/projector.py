"""Parallel-beam radon transform and its exact adjoint.

Pixels are unit squares.  Seen from view angle ``t`` a square casts a
trapezoidal footprint on the detector (two boxes of widths ``|cos t|`` and
``|sin t|`` convolved), and every detector bin reports the average line
integral across its aperture.  The footprint has unit area, so the sum over
one view times ``detector_spacing`` reproduces the image mass exactly.

The matrix is stored sparse; :func:`back_project` is its literal transpose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Geometry",
    "system_matrix",
    "forward_project",
    "back_project",
    "operator_norm_sq",
]

_GEOMETRY_KEYS = (
    "image_size",
    "num_views",
    "num_detectors",
    "detector_spacing",
    "detector_offset",
)


def default_detector_count(image_size: int) -> int:
    """Detector count covering the image diagonal (96 for a 64 image)."""
    return int(math.ceil(1.5 * image_size))


@dataclass(frozen=True)
class Geometry:
    """Parallel-beam acquisition over ``[0, pi)``.

    Pixels and detector bins are both measured in the same length unit
    (pixel side = 1).  The rotation axis passes through the image centre.
    """

    image_size: int
    num_views: int
    num_detectors: int | None = None
    detector_spacing: float = 1.0
    detector_offset: float = 0.0

    def __post_init__(self):
        if self.num_detectors is None:
            object.__setattr__(
                self, "num_detectors", default_detector_count(self.image_size)
            )
        for key in ("image_size", "num_views", "num_detectors"):
            value = getattr(self, key)
            if int(value) != value or value < 1:
                raise ValueError(f"{key} must be a positive integer, got {value!r}")
            object.__setattr__(self, key, int(value))
        if not self.detector_spacing > 0:
            raise ValueError(
                f"detector_spacing must be positive, got {self.detector_spacing!r}"
            )
        span = self.num_detectors * self.detector_spacing
        if span < math.sqrt(2) * self.image_size:
            raise ValueError(
                f"detector array ({self.num_detectors} x {self.detector_spacing}) "
                f"does not cover the image diagonal {math.sqrt(2) * self.image_size:.2f}"
            )
        object.__setattr__(self, "detector_spacing", float(self.detector_spacing))
        object.__setattr__(self, "detector_offset", float(self.detector_offset))

    @cached_property
    def angles(self) -> np.ndarray:
        return np.arange(self.num_views) * (np.pi / self.num_views)

    @cached_property
    def detector_positions(self) -> np.ndarray:
        """Signed bin centres along the detector, in length units."""
        k = np.arange(self.num_detectors) - (self.num_detectors - 1) / 2
        return k * self.detector_spacing + self.detector_offset

    @property
    def image_shape(self) -> tuple[int, int]:
        return (self.image_size, self.image_size)

    @property
    def sinogram_shape(self) -> tuple[int, int]:
        return (self.num_views, self.num_detectors)

    def with_views(self, num_views: int) -> "Geometry":
        return Geometry(
            self.image_size,
            num_views,
            self.num_detectors,
            self.detector_spacing,
            self.detector_offset,
        )

    def to_text(self) -> str:
        return "".join(f"{key} = {getattr(self, key)!r}\n" for key in _GEOMETRY_KEYS)

    @classmethod
    def from_text(cls, text: str) -> "Geometry":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _GEOMETRY_KEYS:
                raise ValueError(f"line {lineno}: unknown geometry key {key!r}")
            values[key] = float(value) if key.startswith("detector_") else int(value)
        return cls(**values)


def pixel_centers(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Physical (x, y) coordinates of pixel centres, y pointing up.

    Row 0 is the top of the image, column 0 the left edge.
    """
    c = np.arange(n) - (n - 1) / 2
    x = np.broadcast_to(c[None, :], (n, n))
    y = np.broadcast_to(-c[:, None], (n, n))
    return x, y


def _footprint_cdf(u: np.ndarray, a: float, b: float) -> np.ndarray:
    """CDF of the unit-area trapezoid ``box(a) * box(b)`` centred on 0."""
    a, b = max(a, b), min(a, b)
    inner, outer = (a - b) / 2, (a + b) / 2
    v = np.abs(u)
    mass = np.minimum(v, inner) / a
    if b > 1e-12:
        w = np.clip(v, inner, outer)
        mass = mass + (w - inner) * (outer - (w + inner) / 2) / (a * b)
    return 0.5 + np.sign(u) * mass


@lru_cache(maxsize=16)
def system_matrix(geom: Geometry) -> sp.csr_matrix:
    """Sparse projection matrix of shape ``(views * detectors, N * N)``."""
    n, w, ds = geom.image_size, geom.num_detectors, geom.detector_spacing
    x, y = pixel_centers(n)
    x = x.ravel()
    y = y.ravel()
    cols = np.arange(n * n)
    edge0 = geom.detector_positions[0] - ds / 2

    rows_all, cols_all, vals_all = [], [], []
    for view, theta in enumerate(geom.angles):
        c, s = abs(math.cos(theta)), abs(math.sin(theta))
        half = (c + s) / 2
        proj = x * math.cos(theta) + y * math.sin(theta)
        first = np.floor((proj - half - edge0) / ds).astype(np.int64)
        span = int(math.ceil(2 * half / ds)) + 1
        for off in range(span):
            k = first + off
            lo = edge0 + k * ds - proj
            wt = (_footprint_cdf(lo + ds, c, s) - _footprint_cdf(lo, c, s)) / ds
            keep = (k >= 0) & (k < w) & (wt > 0)
            rows_all.append(view * w + k[keep])
            cols_all.append(cols[keep])
            vals_all.append(wt[keep])

    rows = np.concatenate(rows_all)
    cols = np.concatenate(cols_all)
    vals = np.concatenate(vals_all)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(geom.num_views * w, n * n))
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


@lru_cache(maxsize=16)
def _transpose(geom: Geometry) -> sp.csr_matrix:
    return system_matrix(geom).T.tocsr()


def _check(arr: np.ndarray, shape: tuple[int, int], what: str) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.shape != shape:
        raise ValueError(f"{what} has shape {arr.shape}, geometry expects {shape}")
    return arr


def forward_project(img: np.ndarray, geom: Geometry) -> np.ndarray:
    """Line integrals of ``img`` for every (view, detector) pair."""
    img = _check(img, geom.image_shape, "image")
    out = system_matrix(geom) @ img.ravel()
    return out.reshape(geom.sinogram_shape)


def back_project(sino: np.ndarray, geom: Geometry) -> np.ndarray:
    """Apply the transpose of the projection matrix to ``sino``."""
    sino = _check(sino, geom.sinogram_shape, "sinogram")
    out = _transpose(geom) @ sino.ravel()
    return out.reshape(geom.image_shape)


@lru_cache(maxsize=16)
def operator_norm_sq(geom: Geometry, iters: int = 100, seed: int = 0) -> float:
    """Largest eigenvalue of ``A^T A`` by power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(geom.image_shape)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        u = back_project(forward_project(v, geom), geom)
        lam = float(np.linalg.norm(u))
        v = u / lam
    return lam
