"""Scenario configuration and the end-to-end observation chain.

One trial sends one symbol through freshly drawn channels (block fading
of length one): direct link S->D plus L RIS relays, each relay phase
configured analytically or by the relay network, then combined at D by
relay selection or MRC.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from functools import cached_property

import numpy as np

from .channel_models import CascadeSpec, RelayGeometry, _as_generator, sample_channel, solve_geometry
from .combining import select_by_gain
from .dnn_relay import estimate_phases
from .errors import ConfigError, MissingModelError
from .neural_net import Network
from .qam_modem import Constellation
from .ris_link import composite_sum, optimal_phases, quantize_phases

SCHEMES = ("RS", "MRC")
PHASE_MODES = ("analytic", "dnn")
DETECTOR_MODES = ("ml", "dnn")
DEFAULT_THETA = 2.0 * math.pi / 3.0
DEFAULT_SNR_GRID = tuple(float(x) for x in np.arange(-45.0, 0.01, 2.5))


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything that defines one BER curve.

    Scenario 1 cascades every link with degree ``K``; scenario 2 cascades
    only S->D and uses plain Nakagami (K=1) on the relay hops.
    """

    scenario: int = 1
    relays: tuple[tuple[float, float], ...] = ((0.5, DEFAULT_THETA), (0.7, DEFAULT_THETA))
    N: int = 8
    K: int = 2
    m: float = 3.0
    omega: float = 1.0
    c: float = 4.0
    M: int = 4
    scheme: str = "RS"
    phase_mode: str = "analytic"
    detector_mode: str = "ml"
    snr_db: tuple[float, ...] = DEFAULT_SNR_GRID
    max_trials: int = 2_000_000
    min_errors: int = 200
    block_size: int = 20_000
    seed: int = 0
    rs_use_direct: bool = False
    phase_bits: int | None = None
    detector_normalize: bool = False
    noise: bool = True

    def __post_init__(self):
        object.__setattr__(self, "relays", tuple((float(d), float(t)) for d, t in self.relays))
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        if self.scenario not in (1, 2):
            raise ConfigError(f"scenario must be 1 or 2, got {self.scenario}")
        if not self.relays:
            raise ConfigError("at least one relay is required")
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.phase_mode not in PHASE_MODES:
            raise ConfigError(f"phase_mode must be one of {PHASE_MODES}, got {self.phase_mode!r}")
        if self.detector_mode not in DETECTOR_MODES:
            raise ConfigError(
                f"detector_mode must be one of {DETECTOR_MODES}, got {self.detector_mode!r}")
        if self.max_trials < 1 or self.block_size < 1 or self.min_errors < 1:
            raise ConfigError("max_trials, block_size and min_errors must be >= 1")
        # fail early on bad channel or geometry parameters
        self.sd_spec, self.relay_spec, self.geometries, self.constellation  # noqa: B018

    @property
    def L(self) -> int:
        return len(self.relays)

    @property
    def relay_K(self) -> int:
        return self.K if self.scenario == 1 else 1

    @cached_property
    def sd_spec(self) -> CascadeSpec:
        return CascadeSpec.uniform(self.K, self.m, self.omega)

    @cached_property
    def relay_spec(self) -> CascadeSpec:
        return CascadeSpec.uniform(self.relay_K, self.m, self.omega)

    @cached_property
    def geometries(self) -> tuple[RelayGeometry, ...]:
        return tuple(solve_geometry(d, t, self.c) for d, t in self.relays)

    @cached_property
    def constellation(self) -> Constellation:
        return Constellation.qam(self.M)

    @property
    def bits_per_symbol(self) -> int:
        return self.constellation.bits_per_symbol

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["relays"] = [list(r) for r in self.relays]
        d["snr_db"] = list(self.snr_db)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        d = dict(d)
        if "relays" in d:
            d["relays"] = tuple(tuple(r) for r in d["relays"])
        if "snr_db" in d:
            d["snr_db"] = tuple(d["snr_db"])
        return cls(**d)


@dataclass
class Models:
    relay: Network | None = None
    detector: Network | None = None

    def check(self, config: ScenarioConfig) -> None:
        if config.phase_mode == "dnn" and self.relay is None:
            raise MissingModelError("phase_mode 'dnn' needs a trained relay network")
        if config.detector_mode == "dnn" and self.detector is None:
            raise MissingModelError("detector_mode 'dnn' needs a trained detector network")


@dataclass
class Observation:
    """One batch of trials as seen by the destination.

    ``r`` / ``h`` are the combined sample and its complex gain (real for
    MRC); ``r_branches`` / ``h_branches`` keep the direct link in row 0 and
    relay ``l`` in row ``l + 1``.
    """

    symbols: np.ndarray
    r: np.ndarray
    h: np.ndarray
    selected: np.ndarray | None
    r_branches: np.ndarray = field(repr=False)
    h_branches: np.ndarray = field(repr=False)


def observe(config: ScenarioConfig, snr_db, n: int, rng, models: Models | None = None,
            ) -> Observation:
    """Draw ``n`` independent trials and combine them at the destination.

    ``snr_db`` is a scalar or a length-``n`` array (per-trial SNR). Draw
    order is fixed (symbols, S->D, per-relay S->R and R->D, noise) and
    does not depend on scheme or phase mode, so configs sharing a seed see
    identical realizations.
    """
    gen = _as_generator(rng)
    models = models or Models()
    if config.phase_mode == "dnn" and models.relay is None:
        raise MissingModelError("phase_mode 'dnn' needs a trained relay network")
    L, N = config.L, config.N

    symbols = gen.integers(0, config.M, n)
    s = config.constellation.points[symbols]
    h_sd = sample_channel(config.sd_spec, gen, n)
    h_rel = np.empty((L, n), dtype=complex)
    for ell, geo in enumerate(config.geometries):
        h_sr = sample_channel(config.relay_spec, gen, (n, N))
        h_rd = sample_channel(config.relay_spec, gen, (n, N))
        if config.phase_mode == "dnn":
            phi = estimate_phases(models.relay, h_sr, h_rd)
        else:
            phi = optimal_phases(h_sr, h_rd)
        phi = quantize_phases(phi, config.phase_bits)
        h_rel[ell] = geo.amplitude_gain * composite_sum(h_sr, h_rd, phi)

    noise = gen.standard_normal((L + 1, n)) + 1j * gen.standard_normal((L + 1, n))
    n0 = 10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0)
    if not config.noise:
        n0 = np.zeros_like(n0)
    noise *= np.sqrt(n0 / 2.0)

    h_br = np.vstack([h_sd[None, :], h_rel])
    r_br = h_br * s + noise

    selected = None
    if config.scheme == "MRC":
        r = np.sum(np.conj(h_br) * r_br, axis=0)
        h = np.sum(np.abs(h_br) ** 2, axis=0).astype(complex)
    else:
        selected = select_by_gain(h_rel, axis=0)
        cols = np.arange(n)
        r_sel = r_br[selected + 1, cols]
        h_sel = h_br[selected + 1, cols]
        if config.rs_use_direct:
            r = np.conj(h_sd) * r_br[0] + np.conj(h_sel) * r_sel
            h = (np.abs(h_sd) ** 2 + np.abs(h_sel) ** 2).astype(complex)
        else:
            r, h = r_sel, h_sel
    return Observation(symbols, r, h, selected, r_br, h_br)
