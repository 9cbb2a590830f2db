"""Evaluation metrics: boundary correctness, interval match, word accuracy.

A detected top/bottom pair counts as correct within an asymmetric pixel
window around the truth; left/right quality is the interval-overlap match
(twice the intersection over the summed lengths); transcripts are scored by
word accuracy, (N - edit_distance) / N pooled over a video.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class DetectionRecord:
    detected: tuple[int, int, int, int]  # top, bottom, left, right
    truth: tuple[int, int, int, int]

    def __post_init__(self):
        for name, (t, b, l, r) in (("detected", self.detected), ("truth", self.truth)):
            if not (t < b and l < r):
                raise ValueError(f"{name} box is degenerate: {(t, b, l, r)}")


@dataclass(frozen=True)
class TranscriptPair:
    recognized: tuple[int, ...]
    truth: tuple[int, ...]


def stbb_correct(rec: DetectionRecord) -> bool:
    """-3 <= T_d - T_gt <= 2 and -2 <= B_d - B_gt <= 3."""
    dt = rec.detected[0] - rec.truth[0]
    db = rec.detected[1] - rec.truth[1]
    return -3 <= dt <= 2 and -2 <= db <= 3


def _intersection(a: tuple[int, int], b: tuple[int, int]) -> float:
    return max(0, min(a[1], b[1]) - max(a[0], b[0]))


def m_ave(records: list[DetectionRecord]) -> float:
    """2 * sum of left/right interval intersections over the summed lengths."""
    if not records:
        raise ValueError("need at least one record")
    num = 0.0
    den = 0.0
    for rec in records:
        det = (rec.detected[2], rec.detected[3])
        gt = (rec.truth[2], rec.truth[3])
        num += 2.0 * _intersection(det, gt)
        den += (det[1] - det[0]) + (gt[1] - gt[0])
    return num / den


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Minimal number of unit-cost insertions, deletions and substitutions."""
    n, m = len(a), len(b)
    if n > m:
        a, b, n, m = b, a, m, n
    current = list(range(n + 1))
    for i in range(1, m + 1):
        previous, current = current, [i] + [0] * n
        for j in range(1, n + 1):
            add = previous[j] + 1
            delete = current[j - 1] + 1
            change = previous[j - 1] + (a[j - 1] != b[i - 1])
            current[j] = min(add, delete, change)
    return current[n]


def w_acc(pairs: list[TranscriptPair]) -> float:
    """(N - sum of edit distances) / N over the pooled pairs.

    Exceeding N edits makes this negative; that is the documented behavior,
    not an error.
    """
    n_total = sum(len(p.truth) for p in pairs)
    if n_total == 0:
        raise ValueError("no ground-truth words to score against")
    e_total = sum(levenshtein(p.recognized, p.truth) for p in pairs)
    return (n_total - e_total) / n_total


@dataclass
class VideoScore:
    video_id: str
    stbb_ok: bool
    m_ave: float
    n_words: int
    edit_dist: int

    @property
    def w_acc(self) -> float:
        return (self.n_words - self.edit_dist) / self.n_words if self.n_words else 1.0


@dataclass
class Report:
    rows: list[VideoScore]

    @property
    def stbb_recall(self) -> float:
        return sum(r.stbb_ok for r in self.rows) / len(self.rows)

    @property
    def m_ave(self) -> float:
        return sum(r.m_ave for r in self.rows) / len(self.rows)

    @property
    def w_acc_pooled(self) -> float:
        """Word-weighted: all words of all videos pooled."""
        n = sum(r.n_words for r in self.rows)
        e = sum(r.edit_dist for r in self.rows)
        return (n - e) / n if n else 1.0

    @property
    def w_acc_by_video(self) -> float:
        """Video-weighted: mean of per-video word accuracies."""
        return sum(r.w_acc for r in self.rows) / len(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["video_id", "stbb_ok", "m_ave", "n_words", "edit_dist", "w_acc"])
        for r in self.rows:
            writer.writerow(
                [r.video_id, int(r.stbb_ok), f"{r.m_ave:.6f}", r.n_words, r.edit_dist, f"{r.w_acc:.6f}"]
            )
        return buf.getvalue()

    def summary(self) -> str:
        return (
            f"videos:            {len(self.rows)}\n"
            f"stbb recall:       {self.stbb_recall:.4f}\n"
            f"mean m_ave:        {self.m_ave:.4f}\n"
            f"w_acc (pooled):    {self.w_acc_pooled:.4f}\n"
            f"w_acc (per video): {self.w_acc_by_video:.4f}\n"
        )
