"""Reading and writing of frame images (PNG via Pillow, binary PGM natively).

Intensities on disk are 8-bit; in memory everything is float in [0, 1].
An image written through this module and read back is value-exact provided
it was quantized to the 256-level grid first (raster.quantize8 — all
generated data is).
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image


def write_pgm(path: str | Path, img: np.ndarray) -> None:
    """Write a grayscale image as binary PGM (P5, maxval 255)."""
    if img.ndim != 2:
        raise ValueError(f"PGM supports grayscale only, got shape {img.shape}")
    data = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary PGM (P5) into a float (H, W) array in [0, 1]."""
    raw = Path(path).read_bytes()
    m = re.match(rb"P5\s+(?:#.*\s+)*(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if m is None:
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    w, h, maxval = (int(g) for g in m.groups())
    if maxval <= 0 or maxval > 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    pixels = np.frombuffer(raw, dtype=np.uint8, count=w * h, offset=m.end())
    if pixels.size != w * h:
        raise ValueError(f"{path}: truncated pixel data")
    return pixels.reshape(h, w).astype(np.float64) / float(maxval)


def write_png(path: str | Path, img: np.ndarray) -> None:
    """Write a grayscale or RGB image as PNG."""
    data = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    if data.ndim == 2:
        Image.fromarray(data, mode="L").save(path)
    elif data.ndim == 3 and data.shape[2] == 3:
        Image.fromarray(data, mode="RGB").save(path)
    else:
        raise ValueError(f"unsupported image shape {img.shape}")


def read_png(path: str | Path) -> np.ndarray:
    """Read a PNG into float [0, 1]; grayscale -> (H, W), color -> (H, W, 3)."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            arr = np.asarray(im.convert("L"), dtype=np.float64)
            return arr / 255.0
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
        return arr / 255.0


def read_image(path: str | Path) -> np.ndarray:
    """Read PNG or PGM by file suffix."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return read_pgm(path)
    if suffix == ".png":
        return read_png(path)
    raise ValueError(f"{path}: unsupported image format '{suffix}'")


def write_image(path: str | Path, img: np.ndarray) -> None:
    """Write PNG or PGM by file suffix."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        write_pgm(path, img)
    elif suffix == ".png":
        write_png(path, img)
    else:
        raise ValueError(f"{path}: unsupported image format '{suffix}'")
