"""Network layers with explicit forward and backward passes.

Activations are batch-first, channels-last float arrays (B, H, W, C).
Each forward returns (output, cache); the matching backward consumes the
cache and the upstream gradient and returns (dx, dw, db), with dw/db None
for parameterless layers.  Everything runs in the dtype of its inputs, so
float64 can be used for finite-difference checks and float32 for speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# Cross-channel response normalization constants (window n, x / (k + a/n * sum)^b).
LRN_N = 5
LRN_K = 1.0
LRN_ALPHA = 1e-4
LRN_BETA = 0.75

KINDS = ("conv", "maxpool", "lrn", "local", "fc", "softmax")


@dataclass(frozen=True)
class LayerSpec:
    """One row of the architecture table.

    kernel is (rows, cols, filters, stride) for conv/maxpool/local, None
    otherwise.  size_in/size_out are (rows, cols, channels).
    """

    kind: str
    size_in: tuple[int, int, int]
    size_out: tuple[int, int, int]
    kernel: tuple[int, int, int, int] | None = None
    pad: int = 0
    relu: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")

    @property
    def has_params(self) -> bool:
        return self.kind in ("conv", "local", "fc")


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    """(B, Hout, Wout, kh, kw, Cin) windows of a padded input."""
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))
    win = win[:, ::stride, ::stride]
    # sliding_window_view leaves (Cin, kh, kw) trailing; put kernel dims first.
    return np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3))


def _col2im(
    dcols: np.ndarray, x_shape: tuple, kh: int, kw: int, stride: int, pad: int
) -> np.ndarray:
    """Scatter window gradients (B, Hout, Wout, kh, kw, Cin) back to the input."""
    b, h, w, c = x_shape
    _, hout, wout = dcols.shape[:3]
    dxp = np.zeros((b, h + 2 * pad, w + 2 * pad, c), dtype=dcols.dtype)
    for ki in range(kh):
        for kj in range(kw):
            dxp[
                :, ki : ki + hout * stride : stride, kj : kj + wout * stride : stride
            ] += dcols[:, :, :, ki, kj]
    if pad:
        return dxp[:, pad:-pad, pad:-pad]
    return dxp


def conv_forward(x, w, b, spec: LayerSpec):
    kh, kw, cout, stride = spec.kernel
    cols = _im2col(x, kh, kw, stride, spec.pad)
    bsz, hout, wout = cols.shape[:3]
    flat = cols.reshape(bsz * hout * wout, -1)
    wmat = w.reshape(-1, cout)
    y = (flat @ wmat).reshape(bsz, hout, wout, cout) + b
    mask = None
    if spec.relu:
        mask = y > 0
        y = y * mask
    return y, (flat, mask, x.shape)


def conv_backward(dy, w, spec: LayerSpec, cache):
    flat, mask, x_shape = cache
    kh, kw, cout, stride = spec.kernel
    cin = w.shape[2]
    if mask is not None:
        dy = dy * mask
    bsz, hout, wout = dy.shape[:3]
    dy_flat = dy.reshape(bsz * hout * wout, cout)
    dw = (flat.T @ dy_flat).reshape(w.shape)
    db = dy.sum(axis=(0, 1, 2))
    dcols = (dy_flat @ w.reshape(-1, cout).T).reshape(bsz, hout, wout, kh, kw, cin)
    dx = _col2im(dcols, x_shape, kh, kw, stride, spec.pad)
    return dx, dw, db


def _pool_extent(n_in: int, k: int, stride: int) -> int:
    # Ceil sizing: the last window may be clipped at the border.
    return int(np.ceil((n_in - k) / stride)) + 1


def maxpool_forward(x, spec: LayerSpec):
    kh, kw, _, stride = spec.kernel
    bsz, h, w, c = x.shape
    hout = _pool_extent(h, kh, stride)
    wout = _pool_extent(w, kw, stride)
    y = np.empty((bsz, hout, wout, c), dtype=x.dtype)
    argmax = np.empty((hout, wout, bsz, c), dtype=np.int64)
    for oi in range(hout):
        r0, r1 = oi * stride, min(oi * stride + kh, h)
        for oj in range(wout):
            c0, c1 = oj * stride, min(oj * stride + kw, w)
            win = x[:, r0:r1, c0:c1].reshape(bsz, -1, c)
            am = win.argmax(axis=1)
            y[:, oi, oj] = np.take_along_axis(win, am[:, None, :], axis=1)[:, 0]
            argmax[oi, oj] = am
    return y, (argmax, x.shape)


def maxpool_backward(dy, spec: LayerSpec, cache):
    argmax, x_shape = cache
    kh, kw, _, stride = spec.kernel
    bsz, h, w, c = x_shape
    hout, wout = dy.shape[1:3]
    dx = np.zeros(x_shape, dtype=dy.dtype)
    bidx = np.arange(bsz)[:, None]
    cidx = np.arange(c)[None, :]
    for oi in range(hout):
        r0, r1 = oi * stride, min(oi * stride + kh, h)
        for oj in range(wout):
            c0, c1 = oj * stride, min(oj * stride + kw, w)
            width = c1 - c0
            am = argmax[oi, oj]
            rr = r0 + am // width
            cc = c0 + am % width
            np.add.at(dx, (bidx, rr, cc, cidx), dy[:, oi, oj])
    return dx


def _channel_window_sum(t: np.ndarray) -> np.ndarray:
    """Sum over the LRN cross-channel window, borders zero-padded."""
    half = LRN_N // 2
    padded = np.pad(t, ((0, 0), (0, 0), (0, 0), (half, half)))
    cs = np.concatenate(
        [np.zeros(t.shape[:3] + (1,), dtype=t.dtype), np.cumsum(padded, axis=3)], axis=3
    )
    return cs[..., LRN_N:] - cs[..., :-LRN_N]


def lrn_forward(x, spec: LayerSpec):
    s = LRN_K + (LRN_ALPHA / LRN_N) * _channel_window_sum(x * x)
    y = x * s ** (-LRN_BETA)
    return y, (x, s)


def lrn_backward(dy, spec: LayerSpec, cache):
    x, s = cache
    t = dy * x * s ** (-LRN_BETA - 1.0)
    dx = dy * s ** (-LRN_BETA) - (2.0 * LRN_BETA * LRN_ALPHA / LRN_N) * x * _channel_window_sum(t)
    return dx


def local_forward(x, w, b, spec: LayerSpec):
    # w: (Hout, Wout, kh, kw, Cin, Cout) untied per output position; b: (Hout, Wout, Cout)
    kh, kw, cout, stride = spec.kernel
    cols = _im2col(x, kh, kw, stride, spec.pad)
    bsz, hout, wout = cols.shape[:3]
    cols_t = cols.reshape(bsz, hout, wout, -1).transpose(1, 2, 0, 3)  # (H, W, B, K)
    wmat = w.reshape(hout, wout, -1, cout)  # (H, W, K, Cout)
    y = np.matmul(cols_t, wmat).transpose(2, 0, 1, 3) + b
    mask = None
    if spec.relu:
        mask = y > 0
        y = y * mask
    return y, (cols_t, mask, x.shape)


def local_backward(dy, w, spec: LayerSpec, cache):
    cols_t, mask, x_shape = cache
    kh, kw, cout, stride = spec.kernel
    cin = w.shape[4]
    if mask is not None:
        dy = dy * mask
    hout, wout = dy.shape[1:3]
    dy_t = dy.transpose(1, 2, 0, 3)  # (H, W, B, Cout)
    wmat = w.reshape(hout, wout, -1, cout)
    dw = np.matmul(cols_t.transpose(0, 1, 3, 2), dy_t).reshape(w.shape)
    db = dy.sum(axis=0)
    dcols_t = np.matmul(dy_t, wmat.transpose(0, 1, 3, 2))  # (H, W, B, K)
    bsz = dy.shape[0]
    dcols = dcols_t.transpose(2, 0, 1, 3).reshape(bsz, hout, wout, kh, kw, cin)
    dx = _col2im(dcols, x_shape, kh, kw, stride, spec.pad)
    return dx, dw, db


def fc_forward(x, w, b, spec: LayerSpec):
    bsz = x.shape[0]
    flat = x.reshape(bsz, -1)
    y = flat @ w + b
    mask = None
    if spec.relu:
        mask = y > 0
        y = y * mask
    return y, (flat, mask, x.shape)


def fc_backward(dy, w, spec: LayerSpec, cache):
    flat, mask, x_shape = cache
    if mask is not None:
        dy = dy * mask
    dw = flat.T @ dy
    db = dy.sum(axis=0)
    dx = (dy @ w.T).reshape(x_shape)
    return dx, dw, db


def softmax_forward(x, spec: LayerSpec):
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)
    return y, (y,)


def softmax_backward(dy, spec: LayerSpec, cache):
    (y,) = cache
    inner = (dy * y).sum(axis=-1, keepdims=True)
    return (dy - inner) * y


def layer_forward(spec: LayerSpec, w, b, x):
    if spec.kind == "conv":
        return conv_forward(x, w, b, spec)
    if spec.kind == "maxpool":
        return maxpool_forward(x, spec)
    if spec.kind == "lrn":
        return lrn_forward(x, spec)
    if spec.kind == "local":
        return local_forward(x, w, b, spec)
    if spec.kind == "fc":
        return fc_forward(x, w, b, spec)
    if spec.kind == "softmax":
        return softmax_forward(x, spec)
    raise ValueError(f"unknown layer kind {spec.kind!r}")


def layer_backward(spec: LayerSpec, w, cache, dy):
    """Returns (dx, dw, db); dw/db are None for parameterless layers."""
    if spec.kind == "conv":
        return conv_backward(dy, w, spec, cache)
    if spec.kind == "maxpool":
        return maxpool_backward(dy, spec, cache), None, None
    if spec.kind == "lrn":
        return lrn_backward(dy, spec, cache), None, None
    if spec.kind == "local":
        return local_backward(dy, w, spec, cache)
    if spec.kind == "fc":
        return fc_backward(dy, w, spec, cache)
    if spec.kind == "softmax":
        return softmax_backward(dy, spec, cache), None, None
    raise ValueError(f"unknown layer kind {spec.kind!r}")
