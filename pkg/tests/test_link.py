import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfc

from svcuep.errors import DomainError, InvalidArgumentError
from svcuep.link import (SUPPORTED_MOD_ORDERS, ChannelConfig, PowerSplit, bit_error_prob,
                         db_to_linear, linear_to_db, packet_error_rate, stream_snr)

CFG64 = ChannelConfig(64, 8, 2, 4)

# frozen from mpmath at 50 digits (quadrature of 2/sqrt(pi) exp(-t^2) from the
# argument to infinity, cross-checked against mpmath.erfc)
PB_GOLDEN = 0.010599689229593794
# 1 - 0.999**1000 by 1000 repeated multiplications at 50 digits
PER_GOLDEN = 0.632304575229036
PER_STABLE_GOLDEN = 9.9999950000066667e-07


class TestDb:
    def test_zero_db(self):
        assert db_to_linear(0.0) == 1.0

    def test_equal_split_of_budget(self):
        half = linear_to_db(db_to_linear(5.50) / 2)
        assert half == pytest.approx(2.4897000433601880, abs=1e-12)
        assert abs(half - 2.48) < 0.01

    def test_three_db(self):
        mp.mp.dps = 40
        oracle = float(mp.power(10, mp.mpf("0.30103")))
        assert db_to_linear(3.0103) == pytest.approx(oracle, rel=1e-15)
        assert db_to_linear(3.0103) == pytest.approx(2.0, rel=1e-7)

    @pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
    def test_non_finite(self, bad):
        with pytest.raises(InvalidArgumentError):
            db_to_linear(bad)

    @given(st.floats(-60.0, 60.0), st.floats(-60.0, 60.0))
    def test_strictly_increasing(self, a, b):
        if a < b:
            assert db_to_linear(a) <= db_to_linear(b)
        if b - a > 1e-9:
            assert db_to_linear(a) < db_to_linear(b)

    def test_round_trip(self):
        x = np.logspace(-6, 6, 2001)
        back = db_to_linear(linear_to_db(x))
        assert np.max(np.abs(back / x - 1)) <= 1e-12


class TestChannelConfig:
    def test_regime(self):
        with pytest.raises(DomainError):
            ChannelConfig(16, 8, 2, 4)
        with pytest.raises(DomainError):
            ChannelConfig(15, 8, 2, 4)

    @pytest.mark.parametrize("m", [1, 3, 8, 32, 128])
    def test_unsupported_modulation(self, m):
        with pytest.raises(InvalidArgumentError):
            ChannelConfig(64, 8, 2, m)

    def test_counts_positive(self):
        with pytest.raises(InvalidArgumentError):
            ChannelConfig(64, 0, 2, 4)


class TestPowerSplit:
    def test_budget_enforced(self):
        with pytest.raises(InvalidArgumentError):
            PowerSplit(5.5, (2.5, 2.5))

    def test_from_base(self):
        s = PowerSplit.from_base_db(5.50, 1.05)
        total = sum(s.layer_linear)
        assert total == pytest.approx(db_to_linear(5.50), rel=1e-12)

    def test_base_exceeds_budget(self):
        with pytest.raises(InvalidArgumentError):
            PowerSplit.from_base_db(5.5, 5.5)

    def test_equal(self):
        s = PowerSplit.equal(5.50)
        assert s.layer_db[0] == s.layer_db[1] == pytest.approx(2.48970004336, abs=1e-10)


class TestStreamSnr:
    def test_examples(self):
        assert stream_snr(1.0, ChannelConfig(64, 8, 2, 4)) == 48.0
        assert stream_snr(2.0, ChannelConfig(64, 8, 2, 4)) == 96.0
        assert stream_snr(1.77, ChannelConfig(128, 8, 2, 4)) == pytest.approx(1.77 * 112, rel=1e-15)

    def test_domain_error_for_duck_typed_config(self):
        class Raw:
            n_tx, n_users, n_rx, mod_order = 16, 8, 2, 4
            streams = 16
            excess_antennas = 0

        with pytest.raises(DomainError):
            stream_snr(1.0, Raw())

    def test_monotone(self):
        assert stream_snr(1.0, ChannelConfig(65, 8, 2, 4)) > stream_snr(1.0, CFG64)
        assert stream_snr(1.1, CFG64) > stream_snr(1.0, CFG64)


def _erfc_by_quadrature(x):
    mp.mp.dps = 30
    return float(2 / mp.sqrt(mp.pi) * mp.quad(lambda t: mp.exp(-t * t), [x, mp.inf]))


class TestBitErrorProb:
    @pytest.mark.parametrize("x", np.linspace(0.0, 5.7, 20))
    def test_erfc_against_quadrature(self, x):
        assert abs(float(erfc(x)) - _erfc_by_quadrature(x)) <= 1e-12

    def test_golden(self):
        p = 10 ** 0.248
        assert bit_error_prob(p, CFG64) == pytest.approx(PB_GOLDEN, rel=1e-13)
        arg = math.sqrt(p * 48 / 16) * math.sin(math.pi / 4)
        assert _erfc_by_quadrature(arg) / 2 == pytest.approx(PB_GOLDEN, rel=1e-13)

    @pytest.mark.parametrize("m", SUPPORTED_MOD_ORDERS)
    def test_zero_argument(self, m):
        cfg = ChannelConfig(17, 8, 2, m)
        assert bit_error_prob(0.0, cfg) == 1.0 / math.log2(m)

    def test_many_antennas(self):
        values = [bit_error_prob(0.5, ChannelConfig(n, 8, 2, 4)) for n in (32, 64, 256, 1024, 8192)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert values[-1] < 1e-50

    def test_monotone_on_log_grid(self):
        p = np.logspace(-4, 1.5, 400)
        pb = bit_error_prob(p, CFG64)
        assert np.all(np.diff(pb) <= 0)
        assert np.all((pb > 0) & (pb <= 1))

    def test_negative_power(self):
        with pytest.raises(InvalidArgumentError):
            bit_error_prob(-1.0, CFG64)

    def test_snr_and_ber_expressions_differ_by_stream_count(self):
        # the erfc argument uses SNR / (K N_r), not the per-stream SNR itself
        p = 1.3
        arg = math.sqrt(stream_snr(p, CFG64) / CFG64.streams) * math.sin(math.pi / 4)
        assert bit_error_prob(p, CFG64) == pytest.approx(math.erfc(arg) / 2, rel=1e-14)


class TestPacketErrorRate:
    def test_length_one_is_identity(self):
        for p in (0.0, 1e-9, 0.123456789, 0.5, 1.0):
            assert packet_error_rate(p, 1) == p

    def test_boundaries(self):
        for length in (1, 7, 10**6):
            assert packet_error_rate(0.0, length) == 0.0
            assert packet_error_rate(1.0, length) == 1.0

    def test_golden(self):
        assert packet_error_rate(0.001, 1000) == pytest.approx(PER_GOLDEN, rel=1e-13)
        assert packet_error_rate(0.001, 1000) == pytest.approx(0.63230, abs=5e-6)

    def test_stable_for_tiny_pb(self):
        assert packet_error_rate(1e-12, 10**6) == pytest.approx(PER_STABLE_GOLDEN, rel=1e-9)

    def test_zero_length(self):
        with pytest.raises(InvalidArgumentError):
            packet_error_rate(0.1, 0)

    def test_bad_probability(self):
        with pytest.raises(InvalidArgumentError):
            packet_error_rate(1.5, 10)

    def test_monotone_grids(self):
        pb = np.logspace(-9, -0.01, 300)
        lengths = np.unique(np.logspace(0, 6, 200).astype(int))
        grid = packet_error_rate(pb[:, None], lengths[None, :])
        assert np.all(np.diff(grid, axis=0) >= 0)
        assert np.all(np.diff(grid, axis=1) >= 0)
        assert np.all((grid >= 0) & (grid <= 1))

    @settings(max_examples=200)
    @given(st.floats(0.0, 1.0), st.integers(1, 10**6))
    def test_range(self, pb, length):
        v = packet_error_rate(pb, length)
        assert 0.0 <= v <= 1.0
        assert v >= pb - 1e-15
