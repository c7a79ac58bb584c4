"""Per-element RIS phase regression.

Each sample is one reflecting element: features are
``[Re h_sr, Im h_sr, Re h_rd, Im h_rd]`` and the target is the aligning
phase encoded as the unit phasor ``[cos phi, sin phi]`` (the raw angle
wraps at 2 pi, which a squared-error regressor cannot represent).
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .channel_models import CascadeSpec, sample_channel
from .errors import ShapeMismatchError
from .neural_net import Dataset, Network, TrainConfig, TrainHistory, train
from .ris_link import TWO_PI, optimal_phases

RELAY_CSV_HEADER = ("feat_re_sr", "feat_im_sr", "feat_re_rd", "feat_im_rd", "tgt_cos", "tgt_sin")
DEFAULT_RELAY_SAMPLES = 400_000
DEFAULT_RELAY_STEPS = 600
DEFAULT_HIDDEN = (256, 256, 256, 256)


def relay_features(h_sr, h_rd) -> np.ndarray:
    h_sr = np.asarray(h_sr, dtype=complex).ravel()
    h_rd = np.asarray(h_rd, dtype=complex).ravel()
    return np.column_stack([h_sr.real, h_sr.imag, h_rd.real, h_rd.imag])


def build_relay_dataset(f: int, sr_spec: CascadeSpec, rd_spec: CascadeSpec | None,
                        rng) -> Dataset:
    """``f`` independent element samples with analytic phase targets."""
    if f < 1:
        raise ValueError("sample count must be >= 1")
    rd_spec = rd_spec or sr_spec
    h_sr = sample_channel(sr_spec, rng, f)
    h_rd = sample_channel(rd_spec, rng, f)
    phi = optimal_phases(h_sr, h_rd)
    return Dataset(relay_features(h_sr, h_rd), np.column_stack([np.cos(phi), np.sin(phi)]))


def new_relay_network(hidden=DEFAULT_HIDDEN, seed: int = 0) -> Network:
    return Network.build([4, *hidden, 2], output_activation="linear",
                         rng=np.random.default_rng(seed))


def train_relay_dnn(dataset: Dataset, config: TrainConfig, hidden=DEFAULT_HIDDEN,
                    ) -> tuple[Network, TrainHistory]:
    net = new_relay_network(hidden, config.seed)
    return train(net, dataset, config, loss="mse")


def estimate_phases(params: Network, h_sr, h_rd) -> np.ndarray:
    """Network phase estimate for every element; output keeps the input shape."""
    h_sr = np.asarray(h_sr, dtype=complex)
    h_rd = np.asarray(h_rd, dtype=complex)
    if h_sr.shape != h_rd.shape:
        raise ShapeMismatchError(f"channel lists differ in shape: {h_sr.shape} vs {h_rd.shape}")
    if params.dims[0] != 4 or params.dims[-1] != 2:
        raise ShapeMismatchError(f"relay network must map 4 -> 2, got {params.dims}")
    if h_sr.size == 0:
        return np.zeros(h_sr.shape)
    out = params.predict(relay_features(h_sr, h_rd))
    # atan2 is scale-free, so renormalising to the unit circle is implicit
    phi = np.mod(np.arctan2(out[:, 1], out[:, 0]), TWO_PI)
    return phi.reshape(h_sr.shape)


def write_relay_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RELAY_CSV_HEADER)
        for feat, tgt in zip(dataset.features, dataset.targets):
            w.writerow([repr(float(v)) for v in (*feat, *tgt)])


def read_relay_csv(path) -> Dataset:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != RELAY_CSV_HEADER:
        raise ValueError(f"{path}: expected header {','.join(RELAY_CSV_HEADER)}")
    arr = np.array(rows[1:], dtype=float).reshape(-1, 6)
    return Dataset(arr[:, :4], arr[:, 4:])
