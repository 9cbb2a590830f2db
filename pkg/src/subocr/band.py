"""Subtitle band detection from accumulated CWT histograms.

Histogram peaks are located by quadratic interpolation, chains of adjacent
rows whose peaks stay within one bin of a seed are grown downward, and
chains tall enough become (top, bottom, scw) candidates.  Three elimination
rules then remove candidates that overlap a taller twin, duplicate another
at doubled width, or sit in the upper half of the frame.
"""

from __future__ import annotations

import math
import statistics
from bisect import insort
from dataclasses import dataclass, field

import numpy as np

from .cwt import CwtHistogram


@dataclass(frozen=True)
class BandConfig:
    w_min: int = 5
    w_max: int = 40
    min_height: int = 12
    chain_select: str = "farthest"  # or "nearest"; see chain_candidates
    similar_scw_tol: int = 2
    similar_stbb_tol: int = 4
    double_scw_tol: float = 0.15

    def __post_init__(self):
        if not 0 < self.w_min < self.w_max:
            raise ValueError(f"need 0 < w_min < w_max, got {self.w_min}, {self.w_max}")
        if self.min_height <= 0:
            raise ValueError(f"min_height must be positive, got {self.min_height}")
        if self.chain_select not in ("farthest", "nearest"):
            raise ValueError(f"unknown chain_select {self.chain_select!r}")
        if self.similar_scw_tol < 0 or self.similar_stbb_tol < 0:
            raise ValueError("similarity tolerances must be nonnegative")
        if self.double_scw_tol <= 0:
            raise ValueError("double_scw_tol must be positive")


@dataclass(frozen=True, order=True)
class BandCandidate:
    top: int
    bottom: int
    scw: int

    @property
    def height(self) -> int:
        return self.bottom - self.top


@dataclass(frozen=True)
class PeakTable:
    """Interpolated peak positions q[row, bin]; 0 marks 'no peak here'.

    Column index is the absolute bin value, so q[:, j] covers j in
    [0, w_max + 1]; only [w_min, w_max] can be nonzero.
    """

    w_min: int
    w_max: int
    q: np.ndarray = field(repr=False)  # (n_rows, w_max + 2) float


def find_peaks_row(hist: CwtHistogram, w_min: int, w_max: int) -> np.ndarray:
    """One PeakTable row: quadratic-interpolated local peaks of a histogram.

    Bin j holds a peak when max(U(j-1), U(j+1)) <= U(j) and U(j) > 0; its
    position is j + (U(j-1) - U(j+1)) / (2 * (U(j-1) - 2U(j) + U(j+1))),
    or j itself on a flat plateau.
    """
    u = hist.counts.astype(np.float64)
    row = np.zeros(w_max + 2)
    for j in range(w_min, w_max + 1):
        left, mid, right = u[j - 1], u[j], u[j + 1]
        if mid <= 0 or max(left, right) > mid:
            continue
        denom = left - 2.0 * mid + right
        if denom == 0.0:
            row[j] = j
        else:
            row[j] = j + 0.5 * (left - right) / denom
    return row


def find_peaks(hists: list[CwtHistogram], w_min: int, w_max: int) -> PeakTable:
    """Peak table over all window rows of a video."""
    q = np.zeros((len(hists), w_max + 2))
    for i, hist in enumerate(hists):
        q[i] = find_peaks_row(hist, w_min, w_max)
    return PeakTable(w_min=w_min, w_max=w_max, q=q)


def _select(candidates: list[float], median: float, mode: str) -> float:
    if mode == "farthest":
        return max(candidates, key=lambda x: abs(x - median))
    return min(candidates, key=lambda x: abs(x - median))


def chain_candidates(peaks: PeakTable, cfg: BandConfig, h: int) -> set[BandCandidate]:
    """Grow peak chains downward from every seed and emit band candidates.

    From a seed (i, j) the chain absorbs, row by row, one positive peak from
    bins {j-1, j, j+1}, stopping at the first row with none.  The published
    selection rule picks the value farthest from the running median
    (chain_select="farthest"); "nearest" is available since the farthest
    rule contradicts the stated similar-peak intent.  A chain reaching k
    rows past its seed yields (i, k + floor(h/2) + 1, floor(median)) when
    k - i + floor(h/2) + 1 >= min_height.
    """
    q = peaks.q
    n_rows = q.shape[0]
    half = h // 2
    out: set[BandCandidate] = set()
    for i in range(n_rows):
        for j in range(cfg.w_min, cfg.w_max + 1):
            if q[i, j] <= 0:
                continue
            chain = [q[i, j]]  # kept sorted for O(1) medians
            k_last = i
            for k in range(i + 1, n_rows):
                cands = [q[k, jj] for jj in (j - 1, j, j + 1) if q[k, jj] > 0]
                if not cands:
                    break
                mid = len(chain) // 2
                med = chain[mid] if len(chain) % 2 else (chain[mid - 1] + chain[mid]) / 2
                insort(chain, _select(cands, med, cfg.chain_select))
                k_last = k
            if k_last - i + half + 1 >= cfg.min_height:
                # Interpolated peaks reach half a bin past the range ends;
                # clamp the floored median back into [w_min, w_max].
                scw = min(cfg.w_max, max(cfg.w_min, math.floor(statistics.median(chain))))
                out.add(BandCandidate(top=i, bottom=k_last + half + 1, scw=scw))
    return out


def _overlap(a: BandCandidate, b: BandCandidate) -> bool:
    return min(a.bottom, b.bottom) - max(a.top, b.top) > 0


def postprocess(
    cands: set[BandCandidate], frame_height: int, cfg: BandConfig | None = None
) -> set[BandCandidate]:
    """Apply the three elimination rules, in order.

    (1) of two overlapping candidates with similar SCW, drop the shorter;
    (2) of two candidates with similar top/bottom where one SCW is about
    twice the other, drop the larger-SCW one;
    (3) drop candidates whose bottom lies in the upper half of the frame.
    """
    if cfg is None:
        cfg = BandConfig()

    # Rule 1: visit tallest first so survivors shadow their shorter twins.
    ordered = sorted(cands, key=lambda c: (-c.height, c.top, c.bottom, c.scw))
    kept: list[BandCandidate] = []
    for cand in ordered:
        clash = any(
            _overlap(cand, other) and abs(cand.scw - other.scw) <= cfg.similar_scw_tol
            for other in kept
        )
        if not clash:
            kept.append(cand)

    # Rule 2: drop the near-doubled SCW of a similar-position pair.
    doubled: set[BandCandidate] = set()
    for cand in kept:
        for other in kept:
            if cand is other:
                continue
            if (
                abs(cand.top - other.top) <= cfg.similar_stbb_tol
                and abs(cand.bottom - other.bottom) <= cfg.similar_stbb_tol
                and abs(cand.scw - 2 * other.scw) <= cfg.double_scw_tol * 2 * other.scw
            ):
                doubled.add(cand)
    kept = [c for c in kept if c not in doubled]

    # Rule 3: subtitles live in the bottom half.
    return {c for c in kept if c.bottom > frame_height / 2}
