"""Monte Carlo simulation of DNN-assisted cooperative RIS relaying over
Nakagami-m and cascaded Nakagami-m fading."""

__version__ = "0.1.0"

from .channel_models import (CascadeSpec, NakagamiStage, RelayGeometry, RngStream,  # noqa: E402
                             cascaded_pdf, sample_channel, sample_nakagami_amplitude,
                             solve_geometry)
from .qam_modem import Constellation, count_bit_errors, demodulate_ml, modulate  # noqa: E402
from .scenario import Models, ScenarioConfig  # noqa: E402
from .simulator import BerRecord, compare_pipelines, run_sweep, run_trial  # noqa: E402

__all__ = [
    "BerRecord", "CascadeSpec", "Constellation", "Models", "NakagamiStage", "RelayGeometry",
    "RngStream", "ScenarioConfig", "cascaded_pdf", "compare_pipelines", "count_bit_errors",
    "demodulate_ml", "modulate", "run_sweep", "run_trial", "sample_channel",
    "sample_nakagami_amplitude", "solve_geometry",
]
