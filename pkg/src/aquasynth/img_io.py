"""Reading, writing, resizing and quantizing image and depth files.

Conventions, fixed as part of the determinism contract:

- RGB files are 8-bit PNG. The export quantizer is round(clamp(x, 0, 1) * 255).
- Depth files are 16-bit grayscale (PNG or binary PGM) whose raw integers
  are millimeters; loading multiplies by 0.001 to get meters.
- RGB resizing is bilinear and happens on the 8-bit data before conversion
  to float; depth resizing is nearest-neighbor on the raw integers.
- Files always store unit-interval data. The [-1, 1] convention some
  consumers expect is applied by ``load_normalized``, never baked into files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import MalformedFile

DEPTH_UNIT_SCALE = 0.001  # raw integer -> meters


def read_rgb(path: str | Path, size: int | None = None) -> np.ndarray:
    """Load an RGB image as float64 in [0, 1], optionally resized to size x size."""
    with Image.open(path) as img:
        img = img.convert("RGB")
        if size is not None and img.size != (size, size):
            img = img.resize((size, size), Image.Resampling.BILINEAR)
        return np.asarray(img, dtype=np.float64) / 255.0


def read_depth(
    path: str | Path,
    size: int | None = None,
    unit_scale: float = DEPTH_UNIT_SCALE,
) -> np.ndarray:
    """Load a raw depth map as float64 meters, optionally resized."""
    with Image.open(path) as img:
        if img.mode not in ("I", "I;16", "I;16B", "L", "F"):
            raise MalformedFile(
                f"depth file {path} has mode {img.mode!r}, expected grayscale"
            )
        if img.mode != "F":
            img = img.convert("I")
        if size is not None and img.size != (size, size):
            img = img.resize((size, size), Image.Resampling.NEAREST)
        raw = np.asarray(img, dtype=np.float64)
    return raw * unit_scale


def quantize_unit(arr: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and quantize to uint8. The single export quantizer."""
    clipped = np.clip(np.asarray(arr, dtype=np.float64), 0.0, 1.0)
    return np.round(clipped * 255.0).astype(np.uint8)


def write_rgb(path: str | Path, arr: np.ndarray) -> None:
    """Quantize a float image and write it as 8-bit PNG."""
    Image.fromarray(quantize_unit(arr), mode="RGB").save(path, format="PNG")


def write_rgb_u8(path: str | Path, arr: np.ndarray) -> None:
    """Write an already-quantized uint8 RGB array as PNG."""
    arr = np.asarray(arr)
    if arr.dtype != np.uint8:
        raise MalformedFile(f"expected uint8 array, got {arr.dtype}")
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def write_depth(path: str | Path, depth_m: np.ndarray) -> None:
    """Write a depth map in meters as 16-bit PNG (millimeter integers)."""
    raw = np.round(np.asarray(depth_m, dtype=np.float64) / DEPTH_UNIT_SCALE)
    raw = np.clip(raw, 0, np.iinfo(np.uint16).max).astype(np.uint16)
    Image.fromarray(raw).save(path, format="PNG")


def normalize(arr: np.ndarray, mode: str) -> np.ndarray:
    """Map unit-interval data to the requested training convention."""
    if mode == "unit-interval":
        return np.asarray(arr, dtype=np.float64)
    if mode == "symmetric-unit":
        return np.asarray(arr, dtype=np.float64) * 2.0 - 1.0
    raise ValueError(f"unknown normalization mode {mode!r}")


def load_normalized(path: str | Path, mode: str = "unit-interval") -> np.ndarray:
    """Load an exported RGB file under a normalization convention."""
    return normalize(read_rgb(path), mode)
