"""Symbol classification at the destination from the combined received sample."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .channel_models import _as_generator
from .errors import ShapeMismatchError
from .neural_net import Dataset, Network, TrainConfig, TrainHistory, train
from .qam_modem import Constellation
from .scenario import Models, ScenarioConfig, observe

DETECTOR_CSV_HEADER = ("re_r", "im_r", "label")
DEFAULT_DETECTOR_SAMPLES = 50_000
DEFAULT_DETECTOR_STEPS = 400
DEFAULT_HIDDEN = (256, 256, 256, 256)


@dataclass(frozen=True)
class ClassMap:
    """Bijection between constellation symbols and class indices.

    Class ``v`` (0-based) is the symbol ``constellation.points[v]``.
    """

    constellation: Constellation

    @property
    def n_classes(self) -> int:
        return self.constellation.order

    def symbol(self, cls):
        return self.constellation.points[cls]

    def class_of(self, symbol_index):
        return np.asarray(symbol_index, dtype=np.intp)


def detector_features(r, normalize: bool = False) -> np.ndarray:
    r = np.asarray(r, dtype=complex).ravel()
    if normalize:
        mag = np.abs(r)
        r = np.where(mag > 0, r / np.where(mag > 0, mag, 1.0), 0)
    return np.column_stack([r.real, r.imag])


def build_detector_dataset(f: int, config: ScenarioConfig, snr_policy="mixture", rng=None,
                           models: Models | None = None) -> Dataset:
    """``f`` full-chain realizations at the destination.

    ``snr_policy`` is ``"mixture"`` (SNR drawn uniformly from the config
    grid per sample) or a fixed SNR in dB. Phases follow the config's
    phase mode, so a DNN-phase pipeline needs ``models.relay``.
    """
    if f < 1:
        raise ValueError("sample count must be >= 1")
    gen = _as_generator(rng)
    if isinstance(snr_policy, str):
        if snr_policy != "mixture":
            raise ValueError(f"unknown SNR policy {snr_policy!r}")
        snr = gen.choice(np.asarray(config.snr_db), size=f)
    else:
        snr = float(snr_policy)
    obs = observe(config, snr, f, gen, models)
    return Dataset(detector_features(obs.r, config.detector_normalize), obs.symbols)


def new_detector_network(n_classes: int, hidden=DEFAULT_HIDDEN, seed: int = 0) -> Network:
    return Network.build([2, *hidden, n_classes], output_activation="softmax",
                         rng=np.random.default_rng(seed))


def train_detector_dnn(dataset: Dataset, config: TrainConfig, n_classes: int = 4,
                       hidden=DEFAULT_HIDDEN) -> tuple[Network, TrainHistory]:
    """Bias-free softmax classifier trained under cross-entropy.

    Inputs are divided by their RMS during training and the scale is
    folded back into the first layer, so the returned network takes raw
    samples. Without biases the network is positively homogeneous: scaling
    ``r`` never changes the decision and ``r = 0`` ties every class.
    """
    scale = float(np.sqrt(np.mean(dataset.features ** 2))) or 1.0
    scaled = Dataset(dataset.features / scale, dataset.targets)
    net = new_detector_network(n_classes, hidden, config.seed)
    net, history = train(net, scaled, replace(config, train_biases=False), loss="cross_entropy")
    net.layers[0].W /= scale
    net.touch()
    return net, history


def classify_symbol(params: Network, r, class_map: ClassMap, normalize: bool = False):
    """Arg-max class for each received sample (lowest index on ties).

    Returns ``(classes, symbols)``; scalars for scalar input.
    """
    if params.dims[0] != 2 or params.dims[-1] != class_map.n_classes:
        raise ShapeMismatchError(
            f"detector must map 2 -> {class_map.n_classes}, got {params.dims}")
    scalar = np.ndim(r) == 0
    probs = params.predict(detector_features(r, normalize))
    cls = np.argmax(probs, axis=1)
    if scalar:
        return int(cls[0]), complex(class_map.symbol(cls[0]))
    return cls, class_map.symbol(cls)


def write_detector_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DETECTOR_CSV_HEADER)
        for (re, im), lab in zip(dataset.features, dataset.targets):
            w.writerow([repr(float(re)), repr(float(im)), int(lab)])


def read_detector_csv(path) -> Dataset:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != DETECTOR_CSV_HEADER:
        raise ValueError(f"{path}: expected header {','.join(DETECTOR_CSV_HEADER)}")
    body = rows[1:]
    feats = np.array([[float(a), float(b)] for a, b, _ in body]).reshape(-1, 2)
    labels = np.array([int(c) for _, _, c in body], dtype=np.intp)
    return Dataset(feats, labels)
