"""A small fully connected network written directly on numpy.

Layers are affine maps followed by relu, linear or softmax activations
(softmax only on the last layer). Training is mini-batch Adam with a held
out validation slice. Models persist in a compact binary format::

    b"RCNN" | u16 version | u32 layer count
    per layer: u32 in | u32 out | u8 activation | f64[in*out] W | f64[out] b
    u32 CRC32 of everything before it

All integers and floats are little-endian; W is stored row-major with
shape (in, out).
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (ChecksumError, DivergenceError, ModelFormatError, ParameterDomainError,
                     ShapeMismatchError, StaleCacheError, VersionMismatchError)

ACTIVATIONS = ("linear", "relu", "softmax")
_TAG = {name: i for i, name in enumerate(ACTIVATIONS)}

MAGIC = b"RCNN"
FORMAT_VERSION = 1
LOG_CLAMP = 1e-12


@dataclass(frozen=True)
class LayerSpec:
    n_in: int
    n_out: int
    activation: str = "relu"

    def __post_init__(self):
        if self.n_in < 1 or self.n_out < 1:
            raise ParameterDomainError("layer dimensions must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ParameterDomainError(f"unknown activation {self.activation!r}")


@dataclass
class Layer:
    W: np.ndarray  # (n_in, n_out)
    b: np.ndarray  # (n_out,)
    activation: str

    @property
    def spec(self) -> LayerSpec:
        return LayerSpec(self.W.shape[0], self.W.shape[1], self.activation)


@dataclass
class ForwardCache:
    owner: int
    version: int
    inputs: list  # activation entering each layer
    preacts: list
    output: np.ndarray


class Network:
    """Ordered layers ``(W_k, b_k, activation_k)``."""

    def __init__(self, layers: Sequence[Layer]):
        layers = list(layers)
        if not layers:
            raise ParameterDomainError("a network needs at least one layer")
        for k, (a, b) in enumerate(zip(layers, layers[1:])):
            if a.W.shape[1] != b.W.shape[0]:
                raise ShapeMismatchError(f"layer {k} output does not feed layer {k + 1}")
        for k, layer in enumerate(layers):
            if layer.activation == "softmax" and k != len(layers) - 1:
                raise ParameterDomainError("softmax is only allowed on the final layer")
            if layer.b.shape != (layer.W.shape[1],):
                raise ShapeMismatchError(f"layer {k} bias has shape {layer.b.shape}")
            if layer.activation not in ACTIVATIONS:
                raise ParameterDomainError(f"unknown activation {layer.activation!r}")
        self.layers = layers
        self._version = 0

    @classmethod
    def build(cls, dims: Sequence[int], output_activation: str = "linear",
              hidden_activation: str = "relu", rng=None) -> "Network":
        """He-uniform init for relu layers, Glorot-uniform otherwise; zero biases."""
        if rng is None:
            rng = np.random.default_rng(0)
        layers = []
        n = len(dims) - 1
        for k in range(n):
            act = output_activation if k == n - 1 else hidden_activation
            spec = LayerSpec(dims[k], dims[k + 1], act)
            if act == "relu":
                limit = math.sqrt(6.0 / spec.n_in)
            else:
                limit = math.sqrt(6.0 / (spec.n_in + spec.n_out))
            W = rng.uniform(-limit, limit, size=(spec.n_in, spec.n_out))
            layers.append(Layer(W, np.zeros(spec.n_out), act))
        return cls(layers)

    @property
    def dims(self) -> list[int]:
        return [self.layers[0].W.shape[0]] + [layer.W.shape[1] for layer in self.layers]

    def copy(self) -> "Network":
        return Network([Layer(l.W.copy(), l.b.copy(), l.activation) for l in self.layers])

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend((layer.W, layer.b))
        return out

    def touch(self) -> None:
        """Mark parameters as modified; older forward caches become stale."""
        self._version += 1

    def forward(self, x, cache: bool = False):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        a = np.atleast_2d(x)
        if a.shape[1] != self.layers[0].W.shape[0]:
            raise ShapeMismatchError(
                f"input dimension {a.shape[1]} != {self.layers[0].W.shape[0]}")
        inputs, preacts = [], []
        for layer in self.layers:
            z = a @ layer.W + layer.b
            if cache:
                inputs.append(a)
                preacts.append(z)
            a = _activate(z, layer.activation)
        out = a[0] if single else a
        if cache:
            return out, ForwardCache(id(self), self._version, inputs, preacts, a)
        return out

    __call__ = forward

    def predict(self, x, chunk: int = 1 << 16) -> np.ndarray:
        """Forward pass in row chunks to bound memory on large batches."""
        x = np.asarray(x, dtype=float)
        if len(x) <= chunk:
            return self.forward(x)
        return np.concatenate([self.forward(x[i:i + chunk]) for i in range(0, len(x), chunk)])

    def backward(self, cache: ForwardCache, grad, at_preactivation: bool = False):
        """Gradients of a scalar loss w.r.t. every ``(W_k, b_k)``.

        ``grad`` is dL/d(output). With ``at_preactivation`` it is instead
        taken to be dL/d(final pre-activation), which is how the fused
        softmax + cross-entropy gradient enters.
        """
        if cache.owner != id(self) or cache.version != self._version:
            raise StaleCacheError("forward cache does not match the current parameters")
        g = np.atleast_2d(np.asarray(grad, dtype=float))
        if g.shape != cache.output.shape:
            raise ShapeMismatchError(f"gradient shape {g.shape} != output {cache.output.shape}")
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.layers)
        for k in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[k]
            z = cache.preacts[k]
            if k == len(self.layers) - 1 and at_preactivation:
                dz = g
            elif layer.activation == "relu":
                dz = g * (z > 0)
            elif layer.activation == "softmax":
                p = _softmax(z)
                dz = p * (g - np.sum(g * p, axis=1, keepdims=True))
            else:
                dz = g
            grads[k] = (cache.inputs[k].T @ dz, dz.sum(axis=0))
            g = dz @ layer.W.T
        return grads


def _softmax(z):
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _activate(z, activation):
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "softmax":
        return _softmax(z)
    return z


def relu(p):
    return np.maximum(np.asarray(p, dtype=float), 0.0)


def softmax(p):
    return _softmax(np.asarray(p, dtype=float))


def forward(params: Network, x):
    return params.forward(x)


def backward(params: Network, cache: ForwardCache, grad, at_preactivation: bool = False):
    return params.backward(cache, grad, at_preactivation)


def mse_loss(predictions, targets) -> float:
    """Half the summed squared residual."""
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise ShapeMismatchError(f"predictions {p.shape} vs targets {t.shape}")
    return 0.5 * float(np.sum((p - t) ** 2))


def cross_entropy_loss(probabilities, labels) -> float:
    """Mean negative log-likelihood of one-hot ``labels``; log clamped at 1e-12."""
    p = np.atleast_2d(np.asarray(probabilities, dtype=float))
    y = np.atleast_2d(np.asarray(labels, dtype=float))
    if p.shape != y.shape:
        raise ShapeMismatchError(f"probabilities {p.shape} vs labels {y.shape}")
    return float(-np.sum(y * np.log(np.maximum(p, LOG_CLAMP))) / p.shape[0])


def one_hot(labels, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.intp)
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


@dataclass
class Dataset:
    """Features plus either real-valued targets or integer class labels."""

    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.targets = np.asarray(self.targets)
        if self.features.ndim != 2:
            raise ShapeMismatchError("features must be a 2-D matrix")
        if len(self.features) != len(self.targets):
            raise ShapeMismatchError(
                f"{len(self.features)} feature rows vs {len(self.targets)} targets")

    def __len__(self) -> int:
        return len(self.features)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 256
    learning_rate: float = 0.003
    steps: int = 600
    validation_split: float = 0.1
    validation_frequency: int = 10
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    train_biases: bool = True

    def __post_init__(self):
        if self.batch_size < 1 or self.steps < 1 or self.validation_frequency < 1:
            raise ParameterDomainError("batch size, steps and validation frequency must be >= 1")
        if not 0 <= self.validation_split < 1:
            raise ParameterDomainError("validation split must lie in [0, 1)")
        if not self.learning_rate > 0:
            raise ParameterDomainError("learning rate must be positive")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_steps: list[int] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)


def _batch_loss(net: Network, x, y, loss: str):
    """Per-sample loss and the gradients of that per-sample loss."""
    out, cache = net.forward(x, cache=True)
    n = len(x)
    if loss == "mse":
        value = mse_loss(out, y) / n
        grads = net.backward(cache, (out - y) / n)
    else:
        value = cross_entropy_loss(out, y)
        grads = net.backward(cache, (out - y) / n, at_preactivation=True)
    return value, grads


def evaluate_loss(net: Network, dataset: Dataset, loss: str) -> float:
    out = net.predict(dataset.features)
    y = _targets(dataset, net, loss)
    if loss == "mse":
        return mse_loss(out, y) / len(dataset)
    return cross_entropy_loss(out, y)


def _targets(dataset: Dataset, net: Network, loss: str):
    if loss == "cross_entropy" and dataset.targets.ndim == 1:
        return one_hot(dataset.targets, net.dims[-1])
    return np.asarray(dataset.targets, dtype=float)


def train(params: Network, dataset: Dataset, config: TrainConfig, loss: str = "mse",
          ) -> tuple[Network, TrainHistory]:
    """Mini-batch Adam for exactly ``config.steps`` updates.

    The first ``validation_split`` fraction of a seeded shuffle is held out;
    its loss is recorded every ``validation_frequency`` steps. Reported
    losses are per sample (MSE as half squared error per row). Returns a
    trained copy; ``params`` is left untouched.
    """
    if loss not in ("mse", "cross_entropy"):
        raise ParameterDomainError(f"unknown loss {loss!r}")
    if len(dataset) == 0:
        raise ParameterDomainError("cannot train on an empty dataset")
    if loss == "cross_entropy" and params.layers[-1].activation != "softmax":
        raise ParameterDomainError("cross-entropy training needs a softmax output layer")
    net = params.copy()
    rng = np.random.default_rng(config.seed)
    x_all = dataset.features
    y_all = _targets(dataset, net, loss)

    order = rng.permutation(len(dataset))
    n_val = int(math.floor(config.validation_split * len(dataset)))
    if n_val >= len(dataset):
        n_val = len(dataset) - 1
    val_idx, train_idx = order[:n_val], order[n_val:]
    batch = min(config.batch_size, len(train_idx))

    m = [np.zeros_like(p) for p in net.params()]
    v = [np.zeros_like(p) for p in net.params()]
    history = TrainHistory()
    perm = rng.permutation(train_idx)
    pos = 0
    for step in range(1, config.steps + 1):
        if pos + batch > len(perm):
            perm = rng.permutation(train_idx)
            pos = 0
        idx = perm[pos:pos + batch]
        pos += batch
        value, grads = _batch_loss(net, x_all[idx], y_all[idx], loss)
        if not math.isfinite(value):
            raise DivergenceError(step, value)
        history.train_loss.append(value)

        flat = [g for pair in grads for g in pair]
        if not config.train_biases:
            flat[1::2] = [np.zeros_like(g) for g in flat[1::2]]
        b1c = 1.0 - config.beta1 ** step
        b2c = 1.0 - config.beta2 ** step
        for p, g, mk, vk in zip(net.params(), flat, m, v):
            mk *= config.beta1
            mk += (1.0 - config.beta1) * g
            vk *= config.beta2
            vk += (1.0 - config.beta2) * g * g
            p -= config.learning_rate * (mk / b1c) / (np.sqrt(vk / b2c) + config.eps)
        net.touch()

        if n_val and step % config.validation_frequency == 0:
            out = net.predict(x_all[val_idx])
            if loss == "mse":
                val = mse_loss(out, y_all[val_idx]) / n_val
            else:
                val = cross_entropy_loss(out, y_all[val_idx])
            if not math.isfinite(val):
                raise DivergenceError(step, val)
            history.val_steps.append(step)
            history.val_loss.append(val)
    return net, history


def to_bytes(net: Network) -> bytes:
    parts = [MAGIC, struct.pack("<HI", FORMAT_VERSION, len(net.layers))]
    for layer in net.layers:
        n_in, n_out = layer.W.shape
        parts.append(struct.pack("<IIB", n_in, n_out, _TAG[layer.activation]))
        parts.append(np.ascontiguousarray(layer.W, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(layer.b, dtype="<f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def from_bytes(data: bytes) -> Network:
    if len(data) < 14 or data[:4] != MAGIC:
        raise ModelFormatError("not a model file (bad magic)")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"model format version {version}, expected {FORMAT_VERSION}")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise ChecksumError("model file checksum mismatch (truncated or corrupted)")
    (count,) = struct.unpack_from("<I", body, 6)
    off = 10
    layers = []
    try:
        for _ in range(count):
            n_in, n_out, tag = struct.unpack_from("<IIB", body, off)
            off += 9
            W = np.frombuffer(body, "<f8", n_in * n_out, off).reshape(n_in, n_out)
            off += 8 * n_in * n_out
            b = np.frombuffer(body, "<f8", n_out, off)
            off += 8 * n_out
            layers.append(Layer(W.astype(float), b.astype(float), ACTIVATIONS[tag]))
    except (struct.error, ValueError, IndexError) as exc:
        raise ModelFormatError(f"malformed model body: {exc}") from exc
    if off != len(body):
        raise ModelFormatError("trailing bytes after last layer")
    return Network(layers)


def save_params(net: Network, path) -> None:
    Path(path).write_bytes(to_bytes(net))


def load_params(path) -> Network:
    return from_bytes(Path(path).read_bytes())
