"""Synthetic test objects and grayscale image ingestion.

All renderers return ``float64`` arrays with values in ``[0, 1]``.  Analytic
shapes are anti-aliased by averaging a 4x4 grid of sub-pixel samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

__all__ = [
    "SHEPP_LOGAN_ELLIPSES",
    "Phantom",
    "render_phantom",
    "shepp_logan",
    "disks",
    "squares",
    "load_image",
    "ellipse_value",
]

# (intensity, semi-axis a, semi-axis b, x0, y0, rotation in degrees) on [-1, 1]^2,
# the high-contrast variant of the Shepp-Logan table.
SHEPP_LOGAN_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)

KINDS = ("shepp_logan", "disks", "squares", "file")
SUPERSAMPLE = 4


@dataclass(frozen=True)
class Phantom:
    """What to render.

    ``shapes`` overrides the default primitives for ``disks`` (``cx, cy, r,
    value`` in pixels from the centre) and ``squares`` (``cx, cy, half_side,
    value``).
    """

    kind: str = "shepp_logan"
    size: int = 64
    path: str | None = None
    shapes: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown phantom kind {self.kind!r}; choose from {KINDS}")
        if self.size < 16 or self.size % 16:
            raise ValueError(f"phantom size must be a positive multiple of 16, got {self.size}")
        if self.kind == "file" and not self.path:
            raise ValueError("file phantom needs a path")


def _subsample_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Sub-pixel sample coordinates, shape ``(n, n, S*S)``, centred, y up."""
    offs = (np.arange(SUPERSAMPLE) + 0.5) / SUPERSAMPLE - 0.5
    c = np.arange(n) - (n - 1) / 2
    xs = (c[None, :, None] + offs[None, None, :]).repeat(n, axis=0)
    ys = (-c[:, None, None] - offs[None, None, :]).repeat(n, axis=1)
    x = np.repeat(xs, SUPERSAMPLE, axis=2)
    y = np.tile(ys, (1, 1, SUPERSAMPLE))
    return x, y


def ellipse_value(x, y, ellipses=SHEPP_LOGAN_ELLIPSES) -> np.ndarray:
    """Sum of intensities of every ellipse containing each point ``(x, y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast(x, y).shape)
    for value, a, b, x0, y0, phi in ellipses:
        t = np.deg2rad(phi)
        dx, dy = x - x0, y - y0
        u = dx * np.cos(t) + dy * np.sin(t)
        v = -dx * np.sin(t) + dy * np.cos(t)
        out += value * ((u / a) ** 2 + (v / b) ** 2 <= 1.0)
    return out


def shepp_logan(n: int = 64) -> np.ndarray:
    x, y = _subsample_grid(n)
    scale = n / 2
    img = ellipse_value(x / scale, y / scale).mean(axis=2)
    return np.clip(img, 0.0, 1.0)


def disks(n: int = 64, shapes=()) -> np.ndarray:
    shapes = shapes or ((0.0, 0.0, n / 4, 1.0),)
    x, y = _subsample_grid(n)
    img = np.zeros((n, n, SUPERSAMPLE * SUPERSAMPLE))
    for cx, cy, r, value in shapes:
        img += value * ((x - cx) ** 2 + (y - cy) ** 2 <= r * r)
    return np.clip(img.mean(axis=2), 0.0, 1.0)


def squares(n: int = 64, shapes=()) -> np.ndarray:
    shapes = shapes or (
        (0.0, 0.0, n * 0.3, 0.5),
        (-n * 0.12, n * 0.1, n * 0.08, 0.5),
        (n * 0.12, -n * 0.08, n * 0.06, 0.3),
    )
    x, y = _subsample_grid(n)
    img = np.zeros((n, n, SUPERSAMPLE * SUPERSAMPLE))
    for cx, cy, half, value in shapes:
        img += value * ((np.abs(x - cx) <= half) & (np.abs(y - cy) <= half))
    return np.clip(img.mean(axis=2), 0.0, 1.0)


def load_image(path, n: int) -> np.ndarray:
    """Read an 8- or 16-bit grayscale PGM/PNG, resample to ``n x n``, scale to [0, 1]."""
    path = Path(path)
    try:
        with PILImage.open(path) as im:
            if im.mode not in ("L", "I", "I;16", "I;16B", "I;16L", "F"):
                im = im.convert("L")
            arr = np.asarray(im, dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot read image {path}: {exc}") from exc
    if arr.ndim != 2:
        raise ValueError(f"{path} is not a single-channel image")
    arr = _bilinear_resize(arr, n)
    lo, hi = arr.min(), arr.max()
    if hi > lo:
        arr = (arr - lo) / (hi - lo)
    else:
        arr = np.zeros_like(arr)
    return arr


def _bilinear_resize(arr: np.ndarray, n: int) -> np.ndarray:
    # half-pixel-centre convention, edges clamped
    def weights(src: int):
        pos = np.clip((np.arange(n) + 0.5) * src / n - 0.5, 0, src - 1)
        i0 = np.floor(pos).astype(int)
        i1 = np.minimum(i0 + 1, src - 1)
        return i0, i1, pos - i0

    r0, r1, fr = weights(arr.shape[0])
    c0, c1, fc = weights(arr.shape[1])
    rows = arr[r0] * (1 - fr)[:, None] + arr[r1] * fr[:, None]
    return rows[:, c0] * (1 - fc) + rows[:, c1] * fc


def render_phantom(ph: Phantom) -> np.ndarray:
    if ph.kind == "shepp_logan":
        return shepp_logan(ph.size)
    if ph.kind == "disks":
        return disks(ph.size, ph.shapes)
    if ph.kind == "squares":
        return squares(ph.size, ph.shapes)
    return load_image(ph.path, ph.size)
