import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erfc

from risrelay.errors import FramingError, ParameterDomainError, ShapeMismatchError
from risrelay.qam_modem import Constellation, count_bit_errors, demodulate_ml, modulate
from risrelay.ris_link import NoiseModel

QPSK = Constellation.qam(4)


def test_qpsk_points():
    bits = [0, 0, 0, 1, 1, 1, 1, 0]
    s = modulate(bits, QPSK)
    expected = {complex(a, b) / math.sqrt(2) for a in (-1, 1) for b in (-1, 1)}
    assert {complex(np.round(x, 12)) for x in s} == {complex(np.round(e, 12)) for e in expected}
    np.testing.assert_allclose(np.abs(s), 1.0, atol=1e-15)


@pytest.mark.parametrize("order", [4, 16, 64])
def test_round_trip(order):
    const = Constellation.qam(order)
    bits = np.random.default_rng(order).integers(0, 2, 600 * const.bits_per_symbol, dtype=np.uint8)
    _, rx = demodulate_ml(modulate(bits, const), 1.0, const)
    np.testing.assert_array_equal(rx.ravel(), bits)


def test_framing_error():
    with pytest.raises(FramingError):
        modulate([1, 0, 1], QPSK)


@pytest.mark.parametrize("order", [2, 8, 12])
def test_bad_order(order):
    with pytest.raises(ParameterDomainError):
        Constellation.qam(order)


def test_noiseless_index():
    for v, s in enumerate(QPSK.points):
        idx, bits = demodulate_ml(0.7j * s, 0.7j, QPSK)
        assert idx == v
        np.testing.assert_array_equal(bits, QPSK.labels[v])


def test_zero_ties_to_lowest_index():
    idx, _ = demodulate_ml(0.0, 1.0, QPSK)
    assert idx == 0


@pytest.mark.parametrize("order", [4, 16])
def test_gray_property(order):
    const = Constellation.qam(order)
    pts = const.points
    dmin = min(abs(a - b) for a, b in itertools.combinations(pts, 2))
    pairs = 0
    for i, j in itertools.combinations(range(order), 2):
        if abs(abs(pts[i] - pts[j]) - dmin) < 1e-9:
            pairs += 1
            assert np.sum(const.labels[i] != const.labels[j]) == 1
    side = int(math.isqrt(order))
    assert pairs == 2 * side * (side - 1)


@pytest.mark.parametrize("order", [4, 16, 64])
def test_unit_energy(order):
    assert np.mean(np.abs(Constellation.qam(order).points) ** 2) == pytest.approx(1.0, abs=1e-12)


@given(st.integers(-20, 20), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 3), st.floats(-np.pi, np.pi))
@settings(max_examples=200, deadline=None)
def test_scale_invariance(e, yr, yi, ha, hp):
    # powers of two scale exactly, so near-ties cannot flip by rounding
    k = 2.0 ** e
    const = Constellation.qam(16)
    y, h = complex(yr, yi), ha * np.exp(1j * hp)
    assert demodulate_ml(k * y, k * h, const)[0] == demodulate_ml(y, h, const)[0]


def test_awgn_ber_oracle():
    # Gray QPSK: BER = Q(sqrt(Es/N0)) = 0.5 erfc(sqrt(Es/(2 N0)))
    expected = 0.5 * erfc(math.sqrt(10.0 / 2))
    assert expected == pytest.approx(7.827e-4, rel=1e-3)
    rng = np.random.default_rng(2024)
    noise = NoiseModel.from_snr_db(10.0)
    errors = total = 0
    for _ in range(10):
        bits = rng.integers(0, 2, 1_000_000, dtype=np.uint8)
        y = modulate(bits, QPSK) + noise.sample(rng, bits.size // 2)
        _, rx = demodulate_ml(y, 1.0, QPSK)
        errors += count_bit_errors(bits, rx)
        total += bits.size
    assert total == 10_000_000
    assert abs(errors / total - expected) / expected < 0.1


def test_count_bit_errors():
    assert count_bit_errors([1, 0, 1, 0], [1, 0, 1, 0]) == 0
    assert count_bit_errors([1, 0, 1, 0], [0, 1, 0, 1]) == 4
    assert count_bit_errors([1, 0, 1, 0], [1, 0, 1, 1]) == 1
    with pytest.raises(ShapeMismatchError):
        count_bit_errors([1, 0], [1])
