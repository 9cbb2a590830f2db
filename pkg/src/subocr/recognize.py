"""Sliding-window character recognition over a detected subtitle region.

Windows of widths w-1, w and w+1 slide across the region at stride 1; each
is resized to the network input size and scored by every ensemble member.
Categories inside any member's top 20 are reserved and their probabilities
averaged across all members; windows whose best average stays at or below
0.2 are taken to straddle two characters and dropped, the rest become
lattice nodes carrying up to 5 candidates above probability 0.05.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .nnet import EnsembleModel, ensemble_probs_batch
from .nnet.model import INPUT_SIZE
from .raster import resize_bilinear, resize_bilinear_stack


@dataclass(frozen=True)
class RecognizeConfig:
    top_k_per_model: int = 20
    accept_threshold: float = 0.2
    keep_top: int = 5
    keep_prob_floor: float = 0.05

    def __post_init__(self):
        if self.top_k_per_model < 1 or self.keep_top < 1:
            raise ValueError("top_k_per_model and keep_top must be >= 1")
        if not 0.0 < self.accept_threshold < 1.0:
            raise ValueError(f"accept_threshold must be in (0, 1), got {self.accept_threshold}")
        if not 0.0 < self.keep_prob_floor < 1.0:
            raise ValueError(f"keep_prob_floor must be in (0, 1), got {self.keep_prob_floor}")


@dataclass(frozen=True)
class CharCandidate:
    category: int
    rprob: float


@dataclass(frozen=True)
class LatticeNode:
    a: int
    b: int
    candidates: tuple[CharCandidate, ...]


def _candidates_from_probs(
    member_probs: np.ndarray, cfg: RecognizeConfig
) -> list[CharCandidate] | None:
    """Ensemble vote for one window; member_probs is (members, z)."""
    m, z = member_probs.shape
    k = min(cfg.top_k_per_model, z)
    reserved = np.zeros(z, dtype=bool)
    # Union of every member's top-k categories.
    top = np.argpartition(member_probs, z - k, axis=1)[:, z - k :]
    reserved[top.ravel()] = True
    avg = member_probs.mean(axis=0)
    avg_reserved = np.where(reserved, avg, 0.0)
    if avg_reserved.max() <= cfg.accept_threshold:
        return None
    order = np.argsort(-avg_reserved, kind="stable")[: cfg.keep_top]
    return [
        CharCandidate(category=int(c), rprob=float(avg_reserved[c]))
        for c in order
        if avg_reserved[c] > cfg.keep_prob_floor
    ]


def classify_window(
    ensemble: EnsembleModel, patch: np.ndarray, cfg: RecognizeConfig | None = None
) -> list[CharCandidate] | None:
    """Candidate categories for one 24x24 patch, or None for a reject."""
    if cfg is None:
        cfg = RecognizeConfig()
    if patch.ndim == 2:
        patch = patch[None, :, :, None]
    elif patch.ndim == 3:
        patch = patch[None]
    if patch.shape[1] != INPUT_SIZE or patch.shape[2] != INPUT_SIZE:
        raise ValueError(f"patch must be {INPUT_SIZE}x{INPUT_SIZE}, got {patch.shape}")
    probs = ensemble_probs_batch(ensemble, patch.astype(np.float32))[:, 0, :]
    return _candidates_from_probs(probs, cfg)


def window_positions(region_w: int, w: int) -> list[tuple[int, int]]:
    """(a, b) spans of the tri-width scan, merged and sorted by (a, b)."""
    spans = []
    for width in (w - 1, w, w + 1):
        for a in range(region_w - width + 1):
            spans.append((a, a + width))
    spans.sort()
    return spans


def extract_windows(region: np.ndarray, w: int) -> tuple[list[tuple[int, int]], np.ndarray]:
    """All tri-width crops of the region resized to the network input.

    Returns the sorted (a, b) spans and a matching (n, 24, 24) stack.
    """
    h, region_w = region.shape
    if region_w < w + 1:
        raise ValueError(f"region width {region_w} narrower than largest window {w + 1}")
    by_span: dict[tuple[int, int], np.ndarray] = {}
    for width in (w - 1, w, w + 1):
        crops = sliding_window_view(region, (h, width)).reshape(-1, h, width)
        resized = resize_bilinear_stack(crops, INPUT_SIZE, INPUT_SIZE)
        for a in range(crops.shape[0]):
            by_span[(a, a + width)] = resized[a]
    spans = sorted(by_span)
    stack = np.stack([by_span[s] for s in spans])
    return spans, stack


def scan_subtitle(
    region: np.ndarray,
    w: int,
    ensemble: EnsembleModel,
    cfg: RecognizeConfig | None = None,
) -> list[LatticeNode]:
    """Recognition lattice of a subtitle region."""
    if cfg is None:
        cfg = RecognizeConfig()
    spans, stack = extract_windows(region, w)
    probs = ensemble_probs_batch(ensemble, stack.astype(np.float32)[..., None])
    nodes = []
    for i, (a, b) in enumerate(spans):
        cands = _candidates_from_probs(probs[:, i, :], cfg)
        if cands:
            nodes.append(LatticeNode(a=a, b=b, candidates=tuple(cands)))
    return nodes


def lattice_to_lines(nodes: list[LatticeNode]) -> str:
    """Debug dump: one 'a b cat:prob,...' line per node."""
    lines = []
    for n in nodes:
        cands = ",".join(f"{c.category}:{c.rprob:.6f}" for c in n.candidates)
        lines.append(f"{n.a} {n.b} {cands}")
    return "\n".join(lines) + ("\n" if lines else "")


def lattice_from_lines(text: str) -> list[LatticeNode]:
    nodes = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        a_str, b_str, cand_str = line.split()
        cands = tuple(
            CharCandidate(category=int(cat), rprob=float(prob))
            for cat, prob in (tok.split(":") for tok in cand_str.split(","))
        )
        nodes.append(LatticeNode(a=int(a_str), b=int(b_str), candidates=cands))
    return nodes
