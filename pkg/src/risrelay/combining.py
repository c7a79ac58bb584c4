"""Destination combining: maximum ratio combining, relay selection and the
ML decision on the combined observation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ShapeMismatchError
from .qam_modem import Constellation, demodulate_ml


@dataclass(frozen=True)
class BranchObservation:
    r: complex
    h_eff: complex
    kind: str = "direct"  # "direct" or "relay"
    relay_index: int | None = None


def mrc_weights(h_eff):
    return np.conj(h_eff)


def mrc_combine(branches: Sequence[BranchObservation]):
    """Conjugate-weighted sum of branch samples.

    Returns ``(r_mrc, h_mrc)`` where ``h_mrc = sum |h_eff|^2`` is the real
    gain multiplying the symbol after combining.
    """
    if not branches:
        raise ShapeMismatchError("MRC needs at least one branch")
    r = np.asarray([b.r for b in branches])
    h = np.asarray([b.h_eff for b in branches])
    return mrc_combine_arrays(r, h, axis=0)


def mrc_combine_arrays(r, h, axis: int = 0):
    """Array form of :func:`mrc_combine`, branches along ``axis``."""
    r = np.asarray(r, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if r.shape != h.shape:
        raise ShapeMismatchError(f"samples {r.shape} and gains {h.shape} differ")
    if r.shape[axis] == 0:
        raise ShapeMismatchError("MRC needs at least one branch")
    r_mrc = np.sum(mrc_weights(h) * r, axis=axis)
    h_mrc = np.sum(np.abs(h) ** 2, axis=axis)
    return r_mrc, h_mrc


def select_relay(metrics) -> int:
    """1-based index of the smallest error metric; ties go to the lowest index."""
    metrics = np.asarray(metrics, dtype=float)
    if metrics.size == 0:
        raise ShapeMismatchError("relay selection needs at least one relay")
    return int(np.argmin(metrics)) + 1


def select_by_gain(h_relays, axis: int = 0) -> np.ndarray:
    """0-based index of the relay with the largest instantaneous |h_eff|^2.

    Larger effective-channel power means lower conditional error
    probability under coherent detection, so this is the per-realization
    stand-in for a minimum-BER rule.
    """
    return np.argmax(np.abs(np.asarray(h_relays)) ** 2, axis=axis)


def detect_mrc(r_mrc, h_mrc, constellation: Constellation):
    return demodulate_ml(r_mrc, h_mrc, constellation)
