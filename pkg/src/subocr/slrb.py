"""Subtitle left/right boundary detection and false-band elimination.

The raw band (full frame width at the detected top/bottom) is scanned by
the tri-width sliding windows; each window is classified text/non-text by
the linear classifier on ensemble features.  Overlapping text windows are
merged into runs, runs of more than min_run windows become clauses, nearby
clauses bridge across spaces, and the widest merged clause gives the
bounds.  Bands in which no clause survives carry no text, which is also
how false band candidates are weeded out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .band import BandCandidate
from .nnet import EnsembleModel, LinearSVM, ensemble_features_batch, svm_predict
from .recognize import extract_windows


@dataclass(frozen=True)
class SlrbConfig:
    beta: float | None = None  # None: choose by frame width (0.7 / 2.5)
    min_run: int = 3
    stride: int = 1

    def __post_init__(self):
        if self.beta is not None and self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.min_run < 1:
            raise ValueError(f"min_run must be >= 1, got {self.min_run}")
        if self.stride != 1:
            raise ValueError("only stride 1 is supported")


@dataclass(frozen=True)
class WindowRegion:
    a: int
    b: int
    predicted: bool  # True = text
    margin: float


def beta_for_width(frame_width: int) -> float:
    """Published operating points: 0.7 at 480-wide, 2.5 at 852-wide video;
    other widths take the nearer of the two."""
    return 0.7 if abs(frame_width - 480) <= abs(frame_width - 852) else 2.5


def scan_band(
    band: np.ndarray,
    w: int,
    ensemble: EnsembleModel,
    svm: LinearSVM,
) -> list[WindowRegion]:
    """Text-predicted windows of the tri-width scan, sorted by (a, b)."""
    spans, stack = extract_windows(band, w)
    feats = ensemble_features_batch(ensemble, stack.astype(np.float32)[..., None])
    is_text, margins = svm_predict(svm, feats)
    return [
        WindowRegion(a=a, b=b, predicted=True, margin=float(m))
        for (a, b), t, m in zip(spans, is_text, margins)
        if t
    ]


def merge_bounds(
    windows: list[WindowRegion], beta: float, w: int, min_run: int = 3
) -> tuple[int, int] | None:
    """Left/right bounds from sorted text windows, or None for no text.

    Overlapping windows chain into runs; a run qualifies as a clause only
    when it has more than min_run windows.  A clause whose first window
    starts within beta * w of the previous clause's right edge extends it.
    The answer is the widest clause; None when none qualifies.
    """
    n = len(windows)
    lefts: list[int] = []
    rights: list[int] = []
    i = 0
    while i < n:
        j = i + 1
        right = windows[i].b
        while j < n and windows[j].a <= right:
            right = max(right, windows[j].b)
            j += 1
        if j - i > min_run:
            if lefts and windows[i].a <= rights[-1] + beta * w:
                rights[-1] = right
            else:
                lefts.append(windows[i].a)
                rights.append(right)
        i = j
    if not lefts:
        return None
    widths = [r - l for l, r in zip(lefts, rights)]
    best = int(np.argmax(widths))
    return lefts[best], rights[best]


@dataclass(frozen=True)
class VerifiedBand:
    band: BandCandidate
    left: int
    right: int


def verify_band(
    cands: set[BandCandidate],
    frames: list[np.ndarray],
    ensemble: EnsembleModel,
    svm: LinearSVM,
    cfg: SlrbConfig | None = None,
) -> VerifiedBand | None:
    """Scan each candidate band on the middle sampled frame and keep the one
    with the widest merged clause; None means no subtitle in this video."""
    if not frames:
        raise ValueError("need at least one frame")
    if cfg is None:
        cfg = SlrbConfig()
    frame = frames[len(frames) // 2]
    beta = cfg.beta if cfg.beta is not None else beta_for_width(frame.shape[1])

    best: VerifiedBand | None = None
    for cand in sorted(cands):
        if frame.shape[1] < cand.scw + 1:
            continue
        band = frame[cand.top : cand.bottom]
        windows = scan_band(band, cand.scw, ensemble, svm)
        bounds = merge_bounds(windows, beta, cand.scw, cfg.min_run)
        if bounds is None:
            continue
        left, right = bounds
        if best is None or right - left > best.right - best.left:
            best = VerifiedBand(band=cand, left=left, right=right)
    return best
