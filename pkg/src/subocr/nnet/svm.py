"""Linear max-margin text/non-text classifier.

Trained by deterministic full-batch subgradient descent on
||w||^2 / (2C) + mean hinge loss, with features standardized to zero mean
and unit variance.  The regularization trade-off C is picked from a small
grid by held-out accuracy, then the model is refit on everything.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

C_GRID = (0.01, 0.1, 1.0, 10.0)


@dataclass
class LinearSVM:
    w: np.ndarray
    b: float
    c: float
    mean: np.ndarray = field(repr=False)
    scale: np.ndarray = field(repr=False)
    val_accuracy: float = float("nan")


def _standardize(features: np.ndarray, mean, scale) -> np.ndarray:
    return (features - mean) / scale


def _fit(xs: np.ndarray, y: np.ndarray, c: float, iters: int, lr0: float):
    n, d = xs.shape
    w = np.zeros(d)
    b = 0.0
    for t in range(iters):
        margins = y * (xs @ w + b)
        active = margins < 1.0
        gw = w / c - (y[active, None] * xs[active]).sum(axis=0) / n
        gb = -y[active].sum() / n
        lr = lr0 / np.sqrt(t + 1.0)
        w -= lr * gw
        b -= lr * gb
    return w, b


def train_svm(
    features: np.ndarray,
    labels: np.ndarray,
    c: float | None = None,
    c_grid: tuple[float, ...] = C_GRID,
    val_fraction: float = 0.2,
    iters: int = 400,
    lr0: float = 0.5,
    seed: int = 0,
) -> LinearSVM:
    """Fit the classifier; labels are +1 (text) / -1 (non-text).

    With c=None the grid is searched on a deterministic held-out split and
    the winning C is recorded on the model.
    """
    features = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if set(np.unique(y)) - {1.0, -1.0}:
        raise ValueError("labels must be +1 or -1")
    if (y > 0).sum() == 0 or (y < 0).sum() == 0:
        raise ValueError("need at least one sample of each class")

    mean = features.mean(axis=0)
    std = features.std(axis=0)
    scale = np.where(std < 1e-12, 1.0, std)
    xs = _standardize(features, mean, scale)

    val_accuracy = float("nan")
    if c is None:
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(y))
        n_val = max(1, int(len(y) * val_fraction))
        val_idx, train_idx = order[:n_val], order[n_val:]
        if len(train_idx) == 0 or len(set(y[train_idx])) < 2:
            train_idx = val_idx = order  # tiny sets: score on the training data
        best = None
        for cand in c_grid:
            w, b = _fit(xs[train_idx], y[train_idx], cand, iters, lr0)
            acc = float(np.mean(np.sign(xs[val_idx] @ w + b) == y[val_idx]))
            if best is None or acc > best[0]:
                best = (acc, cand)
        val_accuracy, c = best

    w, b = _fit(xs, y, c, iters, lr0)
    return LinearSVM(w=w, b=b, c=c, mean=mean, scale=scale, val_accuracy=val_accuracy)


def svm_decision(svm: LinearSVM, features: np.ndarray) -> np.ndarray:
    """Raw margins w.x + b for (B, D) or (D,) features."""
    feats = np.atleast_2d(np.asarray(features, dtype=np.float64))
    margins = _standardize(feats, svm.mean, svm.scale) @ svm.w + svm.b
    return margins if np.asarray(features).ndim > 1 else margins[0]


def svm_predict(svm: LinearSVM, features: np.ndarray):
    """(is_text, margin); a margin of exactly 0 counts as non-text."""
    margins = svm_decision(svm, features)
    return margins > 0, margins
