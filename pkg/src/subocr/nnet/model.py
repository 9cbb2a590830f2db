"""Network architecture, parameters, inference and loss gradients.

The default architecture is the four-stage conv/local net for 24x24
grayscale character patches:

    conv 5x5x64 s1 -> pool 3x3 s2 -> lrn -> conv 5x5x64 s1 -> lrn
    -> pool 3x3 s2 -> local 3x3x64 -> local 3x3x32 -> fc z -> softmax

A width_scale knob shrinks all channel counts uniformly so the same code
runs at desk scale.  Features for the text/non-text classifier are the
flattened activations of the second locally-connected layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import LayerSpec, layer_backward, layer_forward

INPUT_SIZE = 24


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple[LayerSpec, ...]

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.size_out != nxt.size_in:
                raise ValueError(
                    f"size chain broken: {prev.kind} -> {nxt.kind} "
                    f"({prev.size_out} != {nxt.size_in})"
                )

    @property
    def n_classes(self) -> int:
        return self.layers[-1].size_out[2]

    @property
    def feature_layer_index(self) -> int:
        """Index of the last locally-connected layer (the feature tap)."""
        idx = [i for i, l in enumerate(self.layers) if l.kind == "local"]
        if not idx:
            raise ValueError("spec has no locally-connected layer")
        return idx[-1]

    @property
    def feature_dim(self) -> int:
        r, c, ch = self.layers[self.feature_layer_index].size_out
        return r * c * ch


def scaled_channels(base: int, width_scale: float) -> int:
    return max(1, round(base * width_scale))


def default_spec(n_classes: int, width_scale: float = 1.0) -> NetworkSpec:
    """The standard architecture table, optionally width-scaled."""
    if n_classes < 2:
        raise ValueError(f"need at least 2 classes, got {n_classes}")
    c_wide = scaled_channels(64, width_scale)
    c_narrow = scaled_channels(32, width_scale)
    s = INPUT_SIZE
    layers = (
        LayerSpec("conv", (s, s, 1), (s, s, c_wide), (5, 5, c_wide, 1), pad=2, relu=True),
        LayerSpec("maxpool", (s, s, c_wide), (12, 12, c_wide), (3, 3, c_wide, 2)),
        LayerSpec("lrn", (12, 12, c_wide), (12, 12, c_wide)),
        LayerSpec("conv", (12, 12, c_wide), (12, 12, c_wide), (5, 5, c_wide, 1), pad=2, relu=True),
        LayerSpec("lrn", (12, 12, c_wide), (12, 12, c_wide)),
        LayerSpec("maxpool", (12, 12, c_wide), (6, 6, c_wide), (3, 3, c_wide, 2)),
        LayerSpec("local", (6, 6, c_wide), (6, 6, c_wide), (3, 3, c_wide, 1), pad=1, relu=True),
        LayerSpec("local", (6, 6, c_wide), (6, 6, c_narrow), (3, 3, c_narrow, 1), pad=1, relu=True),
        LayerSpec("fc", (6, 6, c_narrow), (1, 1, n_classes)),
        LayerSpec("softmax", (1, 1, n_classes), (1, 1, n_classes)),
    )
    return NetworkSpec(layers)


# Inputs arrive in [0, 1]; the net centers them so features are signed.
INPUT_CENTER = 0.5


@dataclass
class NetworkParams:
    spec: NetworkSpec
    weights: list[np.ndarray | None]
    biases: list[np.ndarray | None]
    seed: int

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            spec=self.spec,
            weights=[None if w is None else w.copy() for w in self.weights],
            biases=[None if b is None else b.copy() for b in self.biases],
            seed=self.seed,
        )


def param_shapes(layer: LayerSpec) -> tuple[tuple, tuple] | None:
    """(weight shape, bias shape) for a parameterized layer, else None."""
    if layer.kind == "conv":
        kh, kw, cout, _ = layer.kernel
        cin = layer.size_in[2]
        return (kh, kw, cin, cout), (cout,)
    if layer.kind == "local":
        kh, kw, cout, _ = layer.kernel
        cin = layer.size_in[2]
        r, c, _ = layer.size_out
        return (r, c, kh, kw, cin, cout), (r, c, cout)
    if layer.kind == "fc":
        din = int(np.prod(layer.size_in))
        dout = layer.size_out[2]
        return (din, dout), (dout,)
    return None


def init_params(spec: NetworkSpec, seed: int, dtype=np.float32) -> NetworkParams:
    rng = np.random.default_rng(seed)
    weights: list[np.ndarray | None] = []
    biases: list[np.ndarray | None] = []
    for layer in spec.layers:
        shapes = param_shapes(layer)
        if shapes is None:
            weights.append(None)
            biases.append(None)
            continue
        w_shape, b_shape = shapes
        std = INIT_STD_FC if layer.kind == "fc" else INIT_STD_CONV
        weights.append(rng.normal(0.0, std, size=w_shape).astype(dtype))
        biases.append(np.zeros(b_shape, dtype=dtype))
    return NetworkParams(spec=spec, weights=weights, biases=biases, seed=seed)


def _as_batch(image: np.ndarray) -> np.ndarray:
    if image.ndim == 2:
        return image[None, :, :, None]
    if image.ndim == 3:
        return image[None]
    return image


def forward_batch(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    """Class probabilities (B, z) for a batch (B, 24, 24, 1)."""
    out = x
    for layer, w, b in zip(params.spec.layers, params.weights, params.biases):
        out, _ = layer_forward(layer, w, b, out)
    return out


def forward(params: NetworkParams, image: np.ndarray) -> np.ndarray:
    """Class probabilities (z,) for one 24x24 grayscale image."""
    return forward_batch(params, _as_batch(image))[0]


def _run_to(params: NetworkParams, x: np.ndarray, last_index: int) -> np.ndarray:
    out = x
    for i in range(last_index + 1):
        layer = params.spec.layers[i]
        out, _ = layer_forward(layer, params.weights[i], params.biases[i], out)
    return out


def extract_features_batch(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    """Flattened feature-layer activations, (B, feature_dim)."""
    tap = params.spec.feature_layer_index
    out = _run_to(params, x, tap)
    return out.reshape(out.shape[0], -1)


def extract_features(params: NetworkParams, image: np.ndarray) -> np.ndarray:
    return extract_features_batch(params, _as_batch(image))[0]


def predict_probs(params: NetworkParams, x: np.ndarray, chunk: int = 256) -> np.ndarray:
    """forward_batch over arbitrary batch sizes, processed in chunks."""
    if x.shape[0] <= chunk:
        return forward_batch(params, x)
    parts = [forward_batch(params, x[i : i + chunk]) for i in range(0, x.shape[0], chunk)]
    return np.concatenate(parts, axis=0)


def features_chunked(params: NetworkParams, x: np.ndarray, chunk: int = 256) -> np.ndarray:
    if x.shape[0] <= chunk:
        return extract_features_batch(params, x)
    parts = [
        extract_features_batch(params, x[i : i + chunk]) for i in range(0, x.shape[0], chunk)
    ]
    return np.concatenate(parts, axis=0)


def loss_and_gradients(
    params: NetworkParams, batch: np.ndarray, labels: np.ndarray
) -> tuple[float, list[np.ndarray | None], list[np.ndarray | None]]:
    """Mean cross-entropy over the batch plus gradients for every tensor.

    The softmax layer is folded into the loss: the run stops at the logits
    and the standard (softmax - onehot) / B gradient is pushed back.
    """
    labels = np.asarray(labels)
    z = params.spec.n_classes
    if labels.min() < 0 or labels.max() >= z:
        raise ValueError(f"labels must lie in [0, {z}), got range "
                         f"[{labels.min()}, {labels.max()}]")
    layers = params.spec.layers
    n_run = len(layers) - 1 if layers[-1].kind == "softmax" else len(layers)

    out = batch
    caches = []
    for i in range(n_run):
        out, cache = layer_forward(layers[i], params.weights[i], params.biases[i], out)
        caches.append(cache)

    logits = out
    bsz = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(log_norm - shifted[np.arange(bsz), labels]))

    probs = np.exp(shifted)
    probs /= probs.sum(axis=1, keepdims=True)
    dlogits = probs
    dlogits[np.arange(bsz), labels] -= 1.0
    dlogits /= bsz

    dweights: list[np.ndarray | None] = [None] * len(layers)
    dbiases: list[np.ndarray | None] = [None] * len(layers)
    grad = dlogits
    for i in range(n_run - 1, -1, -1):
        grad, dw, db = layer_backward(layers[i], params.weights[i], caches[i], grad)
        dweights[i] = dw
        dbiases[i] = db
    return loss, dweights, dbiases


@dataclass
class EnsembleModel:
    """A set of independently trained networks sharing one architecture."""

    members: list[NetworkParams]
    alphabet_size: int
    scw: int

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        spec = self.members[0].spec
        if any(m.spec != spec for m in self.members):
            raise ValueError("all ensemble members must share one spec")
        if spec.n_classes != self.alphabet_size:
            raise ValueError(
                f"spec classes {spec.n_classes} != alphabet size {self.alphabet_size}"
            )

    @property
    def spec(self) -> NetworkSpec:
        return self.members[0].spec

    @property
    def feature_dim(self) -> int:
        return len(self.members) * self.spec.feature_dim


def ensemble_features_batch(
    ensemble: EnsembleModel, x: np.ndarray, chunk: int = 256
) -> np.ndarray:
    """Concatenated per-member features, (B, members * feature_dim)."""
    parts = [features_chunked(m, x, chunk) for m in ensemble.members]
    return np.concatenate(parts, axis=1)


def ensemble_features(ensemble: EnsembleModel, image: np.ndarray) -> np.ndarray:
    return ensemble_features_batch(ensemble, _as_batch(image))[0]


def ensemble_probs_batch(
    ensemble: EnsembleModel, x: np.ndarray, chunk: int = 256
) -> np.ndarray:
    """Per-member class probabilities, (members, B, z)."""
    return np.stack([predict_probs(m, x, chunk) for m in ensemble.members])
