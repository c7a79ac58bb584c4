"""Per-configuration model training used by the CLI and the acceptance suite."""

from __future__ import annotations

import hashlib

from .channel_models import RngStream
from .config import TrainingSettings
from .dnn_detector import build_detector_dataset, train_detector_dnn
from .dnn_relay import build_relay_dataset, train_relay_dnn
from .neural_net import Network, TrainHistory, to_bytes
from .scenario import Models, ScenarioConfig

# dataset streams live apart from the (snr_index, block) simulation streams
RELAY_DATA_STREAM = (1_000_001,)
DETECTOR_DATA_STREAM = (2_000_002,)


def train_relay_for(config: ScenarioConfig, settings: TrainingSettings,
                    ) -> tuple[Network, TrainHistory]:
    """Relay network for the fading law of ``config``'s relay hops."""
    rng = RngStream(config.seed, RELAY_DATA_STREAM)
    data = build_relay_dataset(settings.samples, config.relay_spec, None, rng)
    return train_relay_dnn(data, settings.train, settings.hidden)


def train_detector_for(config: ScenarioConfig, settings: TrainingSettings,
                       models: Models | None = None) -> tuple[Network, TrainHistory]:
    """Destination classifier on full-chain samples of ``config``.

    Phases during data generation follow ``config.phase_mode``.
    """
    rng = RngStream(config.seed, DETECTOR_DATA_STREAM)
    data = build_detector_dataset(settings.samples, config, settings.snr_policy, rng, models)
    return train_detector_dnn(data, settings.train, config.M, settings.hidden)


def relay_key(config: ScenarioConfig) -> str:
    return f"relay_s{config.scenario}_K{config.relay_K}_m{config.m:g}_seed{config.seed}"


def detector_key(config: ScenarioConfig) -> str:
    return (f"detector_s{config.scenario}_{config.scheme}_{config.phase_mode}_N{config.N}"
            f"_K{config.K}_m{config.m:g}_seed{config.seed}")


def digest(net: Network) -> str:
    return hashlib.sha256(to_bytes(net)).hexdigest()
