"""Received-signal models for the direct link and RIS-assisted relays."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel_models import RelayGeometry, _as_generator
from .errors import ParameterDomainError, ShapeMismatchError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class NoiseModel:
    """Complex AWGN with total power ``n0`` (``n0 / 2`` per dimension).

    ``n0 == 0`` disables noise.
    """

    n0: float

    def __post_init__(self):
        if not (self.n0 >= 0 and math.isfinite(self.n0)):
            raise ParameterDomainError(f"noise power must be finite and >= 0, got {self.n0}")

    @classmethod
    def from_snr_db(cls, snr_db: float, es: float = 1.0) -> "NoiseModel":
        return cls(es * 10.0 ** (-snr_db / 10.0))

    @property
    def sigma2(self) -> float:
        return self.n0 / 2.0

    def sample(self, rng, size=None):
        if self.n0 == 0:
            return np.zeros(size, dtype=complex) if size is not None else 0j
        gen = _as_generator(rng)
        z = gen.standard_normal(size) + 1j * gen.standard_normal(size)
        return math.sqrt(self.sigma2) * z


@dataclass(frozen=True)
class RisRelayState:
    h_sr: np.ndarray
    h_rd: np.ndarray
    phi: np.ndarray
    geometry: RelayGeometry

    def __post_init__(self):
        if not (np.shape(self.h_sr) == np.shape(self.h_rd) == np.shape(self.phi)):
            raise ShapeMismatchError("h_sr, h_rd and phi must have the same length")

    @property
    def N(self) -> int:
        return np.shape(self.h_sr)[-1]


def optimal_phases(h_sr, h_rd) -> np.ndarray:
    """Per-element phases that make ``h_sr * e^{j phi} * h_rd`` real and >= 0.

    ``phi = -(arg h_sr + arg h_rd) mod 2 pi``. Written with h = a e^{-j psi}
    this is the familiar ``phi = psi_sr + psi_rd``. Accepts any matching
    array shape.
    """
    h_sr = np.asarray(h_sr, dtype=complex)
    h_rd = np.asarray(h_rd, dtype=complex)
    if h_sr.shape != h_rd.shape:
        raise ShapeMismatchError(f"channel lists differ in shape: {h_sr.shape} vs {h_rd.shape}")
    return np.mod(-(np.angle(h_sr) + np.angle(h_rd)), TWO_PI)


def quantize_phases(phi, bits: int | None) -> np.ndarray:
    """Round phases to a uniform ``2**bits`` grid; ``None`` leaves them continuous."""
    phi = np.asarray(phi, dtype=float)
    if bits is None:
        return phi
    if bits < 1:
        raise ParameterDomainError(f"phase resolution must be >= 1 bit, got {bits}")
    step = TWO_PI / (1 << bits)
    return np.mod(np.round(phi / step) * step, TWO_PI)


def composite_sum(h_sr, h_rd, phi) -> np.ndarray:
    """sum_n h_sr[n] e^{j phi[n]} h_rd[n] over the last axis."""
    return np.sum(np.asarray(h_sr) * np.exp(1j * np.asarray(phi)) * np.asarray(h_rd), axis=-1)


def effective_relay_channel(state: RisRelayState):
    return state.geometry.amplitude_gain * composite_sum(state.h_sr, state.h_rd, state.phi)


def receive_direct(s, h_sd, noise: NoiseModel, rng):
    s = np.asarray(s)
    out = h_sd * s + noise.sample(rng, s.shape if s.ndim else None)
    return out


def receive_relay(s, state: RisRelayState, noise: NoiseModel, rng):
    s = np.asarray(s)
    return effective_relay_channel(state) * s + noise.sample(rng, s.shape if s.ndim else None)
