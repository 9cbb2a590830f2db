"""Momentum SGD training loop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import NetworkParams, NetworkSpec, init_params, loss_and_gradients, predict_probs


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 128
    epochs: int = 1
    learning_rate: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.004
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if min(self.learning_rate, self.momentum, self.weight_decay) < 0:
            raise ValueError("rates must be nonnegative")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")


def sgd_step(
    params: NetworkParams,
    dweights,
    dbiases,
    vel_w,
    vel_b,
    lr: float,
    momentum: float,
    weight_decay: float,
) -> None:
    """One momentum update in place; weight decay applies to weights only."""
    for i, (dw, db) in enumerate(zip(dweights, dbiases)):
        if dw is None:
            continue
        vel_w[i] = momentum * vel_w[i] - lr * (dw + weight_decay * params.weights[i])
        params.weights[i] += vel_w[i].astype(params.weights[i].dtype, copy=False)
        vel_b[i] = momentum * vel_b[i] - lr * db
        params.biases[i] += vel_b[i].astype(params.biases[i].dtype, copy=False)


def train_sgd(
    spec: NetworkSpec,
    images: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
    init_seed: int | None = None,
) -> NetworkParams:
    """Train a fresh network; the data order is reshuffled per epoch.

    images: (N, 24, 24, 1) float; labels: (N,) int.  The shuffle and the
    weight initialization both derive from cfg.seed (or init_seed when
    given), so two configs with different seeds see different batches and
    produce genuinely distinct ensemble members.
    """
    n = images.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    seed = cfg.seed if init_seed is None else init_seed
    params = init_params(spec, seed)
    dtype = params.weights[next(i for i, w in enumerate(params.weights) if w is not None)].dtype
    images = images.astype(dtype, copy=False)

    vel_w = [None if w is None else np.zeros_like(w) for w in params.weights]
    vel_b = [None if b is None else np.zeros_like(b) for b in params.biases]
    rng = np.random.default_rng(seed)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            _, dweights, dbiases = loss_and_gradients(params, images[idx], labels[idx])
            sgd_step(
                params, dweights, dbiases, vel_w, vel_b,
                cfg.learning_rate, cfg.momentum, cfg.weight_decay,
            )
    return params


def accuracy(params: NetworkParams, images: np.ndarray, labels: np.ndarray) -> float:
    probs = predict_probs(params, images.astype(np.float32, copy=False))
    return float(np.mean(probs.argmax(axis=1) == labels))
