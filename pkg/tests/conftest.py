import numpy as np
import pytest

from risrelay.config import load_config, training_settings
from risrelay.scenario import Models, ScenarioConfig
from risrelay.workflow import train_detector_for, train_relay_for

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def default_cfg():
    return load_config()


@pytest.fixture(scope="session")
def base_config():
    """Scenario 1, N=8, K=2, m=3, RS; SNR grid around the 1e-3 crossing."""
    return ScenarioConfig(snr_db=tuple(np.arange(-28.0, -24.5, 1.0)), max_trials=2_000_000)


@pytest.fixture(scope="session")
def relay_net(default_cfg, base_config):
    """Relay network trained with the default budget (400k samples, 600 steps)."""
    net, history = train_relay_for(base_config, training_settings(default_cfg, "relay", 0))
    net.history = history
    return net


@pytest.fixture(scope="session")
def detector_net(default_cfg, base_config, relay_net):
    """Detector for the DNN-phase RS pipeline (50k samples, 400 steps)."""
    cfg = base_config.with_(phase_mode="dnn", detector_mode="dnn",
                            snr_db=tuple(np.arange(-34.0, -19.0, 1.0)))
    net, _ = train_detector_for(cfg, training_settings(default_cfg, "detector", 0),
                                Models(relay=relay_net))
    return net
