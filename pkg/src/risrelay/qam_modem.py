"""Gray-labelled square M-QAM with unit average symbol energy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FramingError, ParameterDomainError, ShapeMismatchError


def _gray(n: np.ndarray) -> np.ndarray:
    return n ^ (n >> 1)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Square M-QAM constellation.

    ``points[v]`` is the symbol whose Gray label is the binary expansion of
    ``v`` (MSB first). The first half of the label selects the in-phase
    level, the second half the quadrature level.
    """

    order: int
    points: np.ndarray
    labels: np.ndarray  # (M, bits_per_symbol) uint8

    @classmethod
    def qam(cls, order: int = 4) -> "Constellation":
        k = int(round(math.log2(order))) if order > 1 else 0
        if order < 4 or 2 ** k != order or k % 2:
            raise ParameterDomainError(f"square QAM needs M a power of 4, got {order}")
        side = 2 ** (k // 2)
        levels = np.arange(-(side - 1), side, 2, dtype=float)
        # amplitude level carrying Gray code g is levels[g_inverse]
        level_of_code = np.empty(side)
        level_of_code[_gray(np.arange(side))] = levels
        idx = np.arange(order)
        i_code = idx >> (k // 2)
        q_code = idx & (side - 1)
        pts = level_of_code[i_code] + 1j * level_of_code[q_code]
        pts = pts / math.sqrt(2.0 * (order - 1) / 3.0)
        labels = ((idx[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)
        pts.setflags(write=False)
        labels.setflags(write=False)
        return cls(order, pts, labels)

    @property
    def bits_per_symbol(self) -> int:
        return self.labels.shape[1]

    def bits_to_indices(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8).ravel()
        k = self.bits_per_symbol
        if bits.size % k:
            raise FramingError(f"{bits.size} bits is not a multiple of {k} bits/symbol")
        weights = 1 << np.arange(k - 1, -1, -1)
        return bits.reshape(-1, k) @ weights

    def indices_to_bits(self, indices) -> np.ndarray:
        return self.labels[np.asarray(indices, dtype=np.intp)].reshape(-1)


def modulate(bits, constellation: Constellation) -> np.ndarray:
    return constellation.points[constellation.bits_to_indices(bits)]


def demodulate_ml(y, h_eff, constellation: Constellation):
    """Coherent ML decision ``argmin_v |y - h_eff * s_v|^2``.

    Works elementwise on arrays. Ties resolve to the lowest symbol index.
    Returns ``(indices, bits)``; for scalar input the index is an int and
    the bits a 1-D array.
    """
    y_arr = np.asarray(y, dtype=complex)
    h_arr = np.asarray(h_eff, dtype=complex)
    scalar = y_arr.ndim == 0 and h_arr.ndim == 0
    y_arr, h_arr = np.broadcast_arrays(np.atleast_1d(y_arr), np.atleast_1d(h_arr))
    dist = np.abs(y_arr[..., None] - h_arr[..., None] * constellation.points) ** 2
    idx = np.argmin(dist, axis=-1)
    if scalar:
        return int(idx[0]), constellation.labels[idx[0]].copy()
    return idx, constellation.labels[idx]


def count_bit_errors(tx_bits, rx_bits) -> int:
    tx = np.asarray(tx_bits, dtype=np.uint8).ravel()
    rx = np.asarray(rx_bits, dtype=np.uint8).ravel()
    if tx.shape != rx.shape:
        raise ShapeMismatchError(f"bit strings differ in length: {tx.size} vs {rx.size}")
    return int(np.count_nonzero(tx != rx))
