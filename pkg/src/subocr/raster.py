"""Image primitives used throughout the pipeline.

Frames are numpy arrays with values in [0, 1]: grayscale frames have shape
(H, W), color frames (H, W, 3).  Binarized frames are uint8 arrays of {0, 1}.
All functions are pure; none mutates its input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

# Rec. 601 luma weights.
LUMA_R, LUMA_G, LUMA_B = 0.299, 0.587, 0.114

# D65 reference white in XYZ, Y normalized to 1.
_D65 = np.array([0.95047, 1.0, 1.08883])

# Linear RGB -> XYZ (sRGB primaries, D65).
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)


@dataclass(frozen=True)
class SauvolaConfig:
    """Parameters of Sauvola local thresholding.

    The window is window_h x window_w, centered on each pixel and clipped at
    the frame border.  r_dynamic is the assumed dynamic range of the standard
    deviation on the [0, 1] intensity scale (0.5 corresponds to the classical
    128 on 8-bit data).
    """

    window_h: int = 150
    window_w: int = 150
    k: float = 0.34
    r_dynamic: float = 0.5

    def __post_init__(self):
        # Even sizes (the published 150) get a left/top-biased center.
        if self.window_h < 3:
            raise ValueError(f"window_h must be >= 3, got {self.window_h}")
        if self.window_w < 3:
            raise ValueError(f"window_w must be >= 3, got {self.window_w}")
        if not 0.0 < self.k < 1.0:
            raise ValueError(f"k must be in (0, 1), got {self.k}")
        if self.r_dynamic <= 0.0:
            raise ValueError(f"r_dynamic must be positive, got {self.r_dynamic}")


def to_grayscale(frame: np.ndarray) -> np.ndarray:
    """Convert an (H, W, 3) RGB frame to (H, W) luma."""
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) frame, got shape {frame.shape}")
    return frame[..., 0] * LUMA_R + frame[..., 1] * LUMA_G + frame[..., 2] * LUMA_B


def rgb_to_lab(frame: np.ndarray) -> np.ndarray:
    """Convert sRGB in [0, 1] to CIE L*a*b* under D65, rescaled to [0, 1].

    Channel 0 is L*/100 (the only channel the pipeline consumes); a* and b*
    are shifted/scaled as (x + 128) / 255 so the output stays in [0, 1].
    """
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) frame, got shape {frame.shape}")
    srgb = np.clip(frame, 0.0, 1.0)
    linear = np.where(
        srgb <= 0.04045, srgb / 12.92, ((srgb + 0.055) / 1.055) ** 2.4
    )
    xyz = linear @ _RGB_TO_XYZ.T
    t = xyz / _D65
    eps = (6.0 / 29.0) ** 3
    f = np.where(t > eps, np.cbrt(t), t / (3.0 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)
    l_star = 116.0 * f[..., 1] - 16.0
    a_star = 500.0 * (f[..., 0] - f[..., 1])
    b_star = 200.0 * (f[..., 1] - f[..., 2])
    out = np.empty_like(frame, dtype=np.float64)
    out[..., 0] = l_star / 100.0
    out[..., 1] = (a_star + 128.0) / 255.0
    out[..., 2] = (b_star + 128.0) / 255.0
    return out


def _window_bounds(n: int, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Border-clipped window bounds per center; even windows bias left/top."""
    centers = np.arange(n)
    r_lo = window // 2
    r_hi = window - 1 - r_lo
    lo = np.clip(centers - r_lo, 0, None)
    hi = np.clip(centers + r_hi + 1, None, n)
    return lo, hi


def sauvola_binarize(gray: np.ndarray, cfg: SauvolaConfig) -> np.ndarray:
    """Binarize a grayscale frame with Sauvola's adaptive threshold.

    A pixel maps to 1 iff its intensity strictly exceeds
    T = m * (1 + k * (s / R - 1)) where m and s are the mean and population
    standard deviation over the border-clipped window.  Bright (subtitle)
    pixels come out as 1.  Implemented with integral images; see the test
    suite for the windowed reference it is held to.
    """
    if gray.ndim != 2:
        raise ValueError(f"expected an (H, W) grayscale frame, got shape {gray.shape}")
    h, w = gray.shape
    if h == 0 or w == 0:
        raise ValueError("empty frame")
    g = gray.astype(np.float64, copy=False)

    p1 = np.zeros((h + 1, w + 1))
    p2 = np.zeros((h + 1, w + 1))
    p1[1:, 1:] = np.cumsum(np.cumsum(g, axis=0), axis=1)
    p2[1:, 1:] = np.cumsum(np.cumsum(g * g, axis=0), axis=1)

    y0, y1 = _window_bounds(h, cfg.window_h)
    x0, x1 = _window_bounds(w, cfg.window_w)
    area = (y1 - y0)[:, None] * (x1 - x0)[None, :]

    def box(p):
        # Sums of nonnegative pixels: clamp the cancellation residue so
        # all-zero windows yield an exact zero mean.
        s = p[np.ix_(y1, x1)] - p[np.ix_(y0, x1)] - p[np.ix_(y1, x0)] + p[np.ix_(y0, x0)]
        return np.maximum(s, 0.0)

    mean = box(p1) / area
    var = np.maximum(box(p2) / area - mean * mean, 0.0)
    std = np.sqrt(var)
    threshold = mean * (1.0 + cfg.k * (std / cfg.r_dynamic - 1.0))
    return (g > threshold).astype(np.uint8)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled 1-D Gaussian with radius ceil(3*sigma), normalized to sum 1."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kern = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return kern / kern.sum()


def gaussian_blur(gray: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with replicated borders."""
    if gray.ndim != 2:
        raise ValueError(f"expected an (H, W) grayscale frame, got shape {gray.shape}")
    kern = gaussian_kernel(sigma)
    out = correlate1d(gray.astype(np.float64, copy=False), kern, axis=0, mode="nearest")
    return correlate1d(out, kern, axis=1, mode="nearest")


def _axis_coords(n_out: int, n_in: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Align-corners source indices and interpolation weights for one axis."""
    if n_out == 1:
        src = np.zeros(1)
    else:
        src = np.arange(n_out) * ((n_in - 1) / (n_out - 1))
    lo = np.minimum(src.astype(np.int64), n_in - 1)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    return lo, hi, frac


def resize_bilinear(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize with align-corners index mapping.

    Accepts (H, W) or (H, W, C) input; same-size calls reproduce the input
    exactly.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"target size must be >= 1, got {out_w}x{out_h}")
    if img.ndim not in (2, 3):
        raise ValueError(f"expected 2-D or 3-D image, got shape {img.shape}")
    h, w = img.shape[:2]
    y0, y1, fy = _axis_coords(out_h, h)
    x0, x1, fx = _axis_coords(out_w, w)
    a = img[np.ix_(y0, x0)]
    b = img[np.ix_(y0, x1)]
    c = img[np.ix_(y1, x0)]
    d = img[np.ix_(y1, x1)]
    if img.ndim == 3:
        fy = fy[:, None, None]
        fx = fx[None, :, None]
    else:
        fy = fy[:, None]
        fx = fx[None, :]
    top = a + (b - a) * fx
    bot = c + (d - c) * fx
    return top + (bot - top) * fy


def resize_bilinear_stack(stack: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Resize a (B, H, W) stack of same-size grayscale images at once.

    Matches resize_bilinear applied per image; used on sliding-window crops
    where thousands of identical-geometry resizes are needed.
    """
    if stack.ndim != 3:
        raise ValueError(f"expected a (B, H, W) stack, got shape {stack.shape}")
    if out_w < 1 or out_h < 1:
        raise ValueError(f"target size must be >= 1, got {out_w}x{out_h}")
    _, h, w = stack.shape
    y0, y1, fy = _axis_coords(out_h, h)
    x0, x1, fx = _axis_coords(out_w, w)
    a = stack[:, y0[:, None], x0[None, :]]
    b = stack[:, y0[:, None], x1[None, :]]
    c = stack[:, y1[:, None], x0[None, :]]
    d = stack[:, y1[:, None], x1[None, :]]
    fy = fy[None, :, None]
    fx = fx[None, None, :]
    top = a + (b - a) * fx
    bot = c + (d - c) * fx
    return top + (bot - top) * fy


def crop(frame: np.ndarray, top: int, bottom: int, left: int, right: int) -> np.ndarray:
    """Copy out the rectangle [top:bottom, left:right]."""
    h, w = frame.shape[:2]
    if not (0 <= top < bottom <= h):
        raise ValueError(f"bad row range [{top}, {bottom}) for height {h}")
    if not (0 <= left < right <= w):
        raise ValueError(f"bad column range [{left}, {right}) for width {w}")
    return frame[top:bottom, left:right].copy()


def quantize8(img: np.ndarray) -> np.ndarray:
    """Snap intensities to the 256-level grid used by the 8-bit file formats."""
    return np.round(np.clip(img, 0.0, 1.0) * 255.0) / 255.0
