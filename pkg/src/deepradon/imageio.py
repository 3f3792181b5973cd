"""Reading and writing images: 8-bit PNG/PGM previews and raw float64 dumps."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image as PILImage

__all__ = ["write_image", "write_raw", "read_raw", "read_image"]

RAW_SUFFIXES = (".f64", ".raw")


def write_image(path, img, lo: float = 0.0, hi: float = 1.0) -> Path:
    """Save ``img`` windowed to ``[lo, hi]`` as an 8-bit grayscale PNG or PGM."""
    path = Path(path)
    scaled = np.clip((np.asarray(img, dtype=np.float64) - lo) / (hi - lo), 0.0, 1.0)
    PILImage.fromarray(np.round(scaled * 255).astype(np.uint8), mode="L").save(path)
    return path


def write_raw(path, img) -> Path:
    """Row-major little-endian float64, no header."""
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(img, dtype="<f8").tobytes())
    return path


def read_raw(path) -> np.ndarray:
    data = np.frombuffer(Path(path).read_bytes(), dtype="<f8")
    n = int(round(np.sqrt(data.size)))
    if n * n != data.size:
        raise ValueError(f"{path}: {data.size} values do not form a square image")
    return data.reshape(n, n).astype(np.float64)


def read_image(path) -> np.ndarray:
    """Raw float64 dumps as stored; PNG/PGM scaled by the format's full range."""
    path = Path(path)
    if path.suffix.lower() in RAW_SUFFIXES:
        return read_raw(path)
    try:
        with PILImage.open(path) as im:
            if im.mode not in ("L", "I", "I;16", "I;16B", "I;16L", "F"):
                im = im.convert("L")
            mode = im.mode
            arr = np.asarray(im, dtype=np.float64)
    except OSError as exc:
        raise ValueError(f"cannot read image {path}: {exc}") from exc
    if mode == "L":
        return arr / 255.0
    if mode.startswith("I"):
        return arr / 65535.0
    return arr
