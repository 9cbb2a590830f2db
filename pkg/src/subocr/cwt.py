"""Character Width Transform.

For a horizontal window of height h sliding down a binarized frame, each
column's ink count is computed; columns that are strict local minima (or
zero) mark likely inter-character gaps.  Pairwise distances between those
columns, histogrammed over every sampled frame of the video, peak near the
single character width at subtitle rows and stay flat elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CwtConfig:
    h: int
    w_min: int = 5
    w_max: int = 40
    run_removal_len: int = 30
    sample_fps: float = 0.0625

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError(f"window height must be positive, got {self.h}")
        if not 0 < self.w_min < self.w_max:
            raise ValueError(f"need 0 < w_min < w_max, got {self.w_min}, {self.w_max}")
        if self.run_removal_len < 2:
            raise ValueError(f"run_removal_len must be >= 2, got {self.run_removal_len}")
        if self.sample_fps <= 0:
            raise ValueError(f"sample_fps must be positive, got {self.sample_fps}")


@dataclass(frozen=True)
class ColumnSums:
    """Per-column ink counts of one window position (top row row_top)."""

    row_top: int
    values: np.ndarray  # (W,) int


@dataclass(frozen=True)
class LmpSet:
    """Local-minimum-point columns of one window position, strictly increasing."""

    row_top: int
    columns: np.ndarray  # (n,) int


@dataclass(frozen=True)
class DistanceMultiset:
    """Pairwise LMP distances d with w_min < d < w_max, sorted ascending."""

    distances: np.ndarray  # (m,) int


@dataclass(frozen=True)
class CwtHistogram:
    """Distance histogram of one window row, accumulated over a whole video.

    counts is indexed directly by candidate width and covers 0..w_max+1, so
    the padded neighbors needed by peak interpolation are plain lookups;
    entries outside (w_min, w_max) are zero by construction.
    """

    row_top: int
    w_min: int
    w_max: int
    counts: np.ndarray = field(repr=False)  # (w_max + 2,) int


def column_sums(bin_frame: np.ndarray, row_top: int, h: int) -> ColumnSums:
    """Sum the binarized pixels of each column over rows [row_top, row_top+h)."""
    height, _ = bin_frame.shape
    if h <= 0 or not 0 <= row_top <= height - h:
        raise ValueError(
            f"window rows [{row_top}, {row_top + h}) out of range for height {height}"
        )
    vals = bin_frame[row_top : row_top + h].sum(axis=0, dtype=np.int64)
    return ColumnSums(row_top=row_top, values=vals)


def _lmp_mask(values: np.ndarray, run_removal_len: int) -> np.ndarray:
    """Boolean LMP mask for one row of column sums.

    A column qualifies if it is a strict local minimum of its two neighbors
    or its sum is zero; border columns can only qualify through the zero
    rule.  Maximal runs of >= run_removal_len consecutive LMP columns are
    then deleted outright (long runs can only come from background).
    """
    v = values
    mask = v == 0
    if v.size >= 3:
        interior = v[1:-1] < np.minimum(v[:-2], v[2:])
        mask[1:-1] |= interior
    # Run removal: find run boundaries on the padded mask.
    padded = np.concatenate(([False], mask, [False]))
    diff = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(diff == 1)
    ends = np.flatnonzero(diff == -1)
    for s, e in zip(starts, ends):
        if e - s >= run_removal_len:
            mask[s:e] = False
    return mask


def find_lmps(sums: ColumnSums, run_removal_len: int) -> LmpSet:
    """Detect local-minimum-point columns in one window row."""
    if sums.values.size < 3:
        raise ValueError("need at least 3 columns to detect local minima")
    mask = _lmp_mask(sums.values, run_removal_len)
    return LmpSet(row_top=sums.row_top, columns=np.flatnonzero(mask))


def pairwise_distances(lmps: LmpSet, w_min: int, w_max: int) -> DistanceMultiset:
    """All unordered pairwise LMP distances d with w_min < d < w_max."""
    cols = lmps.columns
    if cols.size < 2:
        return DistanceMultiset(distances=np.empty(0, dtype=np.int64))
    diff = cols[None, :] - cols[:, None]
    d = diff[np.triu_indices(cols.size, k=1)]
    d = d[(d > w_min) & (d < w_max)]
    return DistanceMultiset(distances=np.sort(d))


def _frame_distance_counts(
    bin_frame: np.ndarray, cfg: CwtConfig
) -> np.ndarray:
    """(n_rows, w_max + 2) distance counts for every window row of one frame."""
    height, width = bin_frame.shape
    n_rows = height - cfg.h + 1
    # Prefix sums over rows give all window column sums in one shot.
    prefix = np.zeros((height + 1, width), dtype=np.int64)
    np.cumsum(bin_frame, axis=0, out=prefix[1:])
    sums = prefix[cfg.h :] - prefix[:-cfg.h]  # (n_rows, W)

    counts = np.zeros((n_rows, cfg.w_max + 2), dtype=np.int64)
    for i in range(n_rows):
        mask = _lmp_mask(sums[i], cfg.run_removal_len)
        cols = np.flatnonzero(mask)
        if cols.size < 2:
            continue
        diff = cols[None, :] - cols[:, None]
        d = diff[np.triu_indices(cols.size, k=1)]
        d = d[(d > cfg.w_min) & (d < cfg.w_max)]
        if d.size:
            counts[i] += np.bincount(d, minlength=cfg.w_max + 2)
    return counts


def accumulate_histograms(
    frames: list[np.ndarray], cfg: CwtConfig
) -> list[CwtHistogram]:
    """Accumulate per-row distance histograms over all (pre-sampled) frames."""
    if not frames:
        raise ValueError("need at least one frame")
    shape = frames[0].shape
    if any(f.shape != shape for f in frames):
        raise ValueError("all frames must share the same size")
    height, _ = shape
    if cfg.h >= height:
        raise ValueError(f"window height {cfg.h} must be < frame height {height}")

    total = np.zeros((height - cfg.h + 1, cfg.w_max + 2), dtype=np.int64)
    for frame in frames:
        total += _frame_distance_counts(frame, cfg)
    return [
        CwtHistogram(row_top=i, w_min=cfg.w_min, w_max=cfg.w_max, counts=total[i])
        for i in range(total.shape[0])
    ]
