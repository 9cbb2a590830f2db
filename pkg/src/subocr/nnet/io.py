"""Model persistence.

Network files are versioned binaries: magic "SUBN", a header describing the
layer table, then the parameter tensors as little-endian float32 blobs in
layer order (weights then biases per layer).  Round-trips are bit-exact.
The classifier uses magic "SUBV" with float64 payloads.  An ensemble is a
directory holding member files plus a small manifest with the alphabet
metadata.
"""

from __future__ import annotations

import configparser
import struct
from pathlib import Path

import numpy as np

from .layers import KINDS, LayerSpec
from .model import EnsembleModel, NetworkParams, NetworkSpec, param_shapes
from .svm import LinearSVM

MODEL_MAGIC = b"SUBN"
SVM_MAGIC = b"SUBV"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sIQI")
_LAYER_ROW = struct.Struct("<BBBBHHHHHHHHHH")


def _pack_layer(layer: LayerSpec) -> bytes:
    kernel = layer.kernel or (0, 0, 0, 0)
    return _LAYER_ROW.pack(
        KINDS.index(layer.kind) + 1,
        1 if layer.relu else 0,
        layer.pad,
        0,
        *kernel,
        *layer.size_in,
        *layer.size_out,
    )


def _unpack_layer(row: bytes) -> LayerSpec:
    vals = _LAYER_ROW.unpack(row)
    kind = KINDS[vals[0] - 1]
    kernel = vals[4:8] if any(vals[4:8]) else None
    return LayerSpec(
        kind=kind,
        size_in=tuple(vals[8:11]),
        size_out=tuple(vals[11:14]),
        kernel=kernel,
        pad=vals[2],
        relu=bool(vals[1]),
    )


def save_model(params: NetworkParams, path: str | Path) -> None:
    layers = params.spec.layers
    chunks = [_HEADER.pack(MODEL_MAGIC, FORMAT_VERSION, params.seed, len(layers))]
    chunks += [_pack_layer(l) for l in layers]
    for w, b in zip(params.weights, params.biases):
        if w is None:
            continue
        chunks.append(np.ascontiguousarray(w, dtype="<f4").tobytes())
        chunks.append(np.ascontiguousarray(b, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_model(path: str | Path) -> NetworkParams:
    raw = Path(path).read_bytes()
    magic, version, seed, n_layers = _HEADER.unpack_from(raw, 0)
    if magic != MODEL_MAGIC:
        raise ValueError(f"{path}: not a model file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    offset = _HEADER.size
    layers = []
    for _ in range(n_layers):
        layers.append(_unpack_layer(raw[offset : offset + _LAYER_ROW.size]))
        offset += _LAYER_ROW.size
    spec = NetworkSpec(tuple(layers))

    weights: list[np.ndarray | None] = []
    biases: list[np.ndarray | None] = []
    for layer in layers:
        shapes = param_shapes(layer)
        if shapes is None:
            weights.append(None)
            biases.append(None)
            continue
        w_shape, b_shape = shapes
        for shape, dest in ((w_shape, weights), (b_shape, biases)):
            count = int(np.prod(shape))
            arr = np.frombuffer(raw, dtype="<f4", count=count, offset=offset)
            dest.append(arr.reshape(shape).copy())
            offset += count * 4
    if offset != len(raw):
        raise ValueError(f"{path}: {len(raw) - offset} trailing bytes")
    return NetworkParams(spec=spec, weights=weights, biases=biases, seed=seed)


_SVM_HEADER = struct.Struct("<4sIQddd")


def save_svm(svm: LinearSVM, path: str | Path) -> None:
    chunks = [
        _SVM_HEADER.pack(
            SVM_MAGIC, FORMAT_VERSION, svm.w.size, svm.c, svm.b, svm.val_accuracy
        ),
        np.ascontiguousarray(svm.w, dtype="<f8").tobytes(),
        np.ascontiguousarray(svm.mean, dtype="<f8").tobytes(),
        np.ascontiguousarray(svm.scale, dtype="<f8").tobytes(),
    ]
    Path(path).write_bytes(b"".join(chunks))


def load_svm(path: str | Path) -> LinearSVM:
    raw = Path(path).read_bytes()
    magic, version, dim, c, b, val_acc = _SVM_HEADER.unpack_from(raw, 0)
    if magic != SVM_MAGIC:
        raise ValueError(f"{path}: not a classifier file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    offset = _SVM_HEADER.size
    arrays = []
    for _ in range(3):
        arr = np.frombuffer(raw, dtype="<f8", count=dim, offset=offset).copy()
        arrays.append(arr)
        offset += dim * 8
    w, mean, scale = arrays
    return LinearSVM(w=w, b=b, c=c, mean=mean, scale=scale, val_accuracy=val_acc)


def save_ensemble(
    ensemble: EnsembleModel, svm: LinearSVM | None, dirpath: str | Path
) -> Path:
    """Write member files, the classifier, and the manifest; returns it."""
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    member_names = []
    for i, member in enumerate(ensemble.members):
        name = f"member_{i:03d}.subn"
        save_model(member, d / name)
        member_names.append(name)
    cp = configparser.ConfigParser()
    cp["ensemble"] = {
        "alphabet_size": str(ensemble.alphabet_size),
        "scw": str(ensemble.scw),
        "members": " ".join(member_names),
    }
    if svm is not None:
        save_svm(svm, d / "classifier.subv")
        cp["ensemble"]["svm"] = "classifier.subv"
    manifest = d / "ensemble.ini"
    with open(manifest, "w") as f:
        cp.write(f)
    return manifest


def load_ensemble(dirpath: str | Path) -> tuple[EnsembleModel, LinearSVM | None]:
    d = Path(dirpath)
    cp = configparser.ConfigParser()
    read = cp.read(d / "ensemble.ini")
    if not read:
        raise FileNotFoundError(f"{d}: no ensemble.ini manifest")
    sec = cp["ensemble"]
    members = [load_model(d / name) for name in sec["members"].split()]
    ensemble = EnsembleModel(
        members=members,
        alphabet_size=sec.getint("alphabet_size"),
        scw=sec.getint("scw"),
    )
    svm = load_svm(d / sec["svm"]) if "svm" in sec else None
    return ensemble, svm
