import numpy as np
import pytest
from scipy.signal import freqz, lfilter

from oracles import shannon_entropy_reference
from sensorstack.errors import ConfigError, UsageError
from sensorstack.eventsync import (
    TimeSeries,
    butterworth_lowpass,
    design_lowpass,
    extract_imu_features,
    shannon_entropy,
    sliding_entropy,
)


class TestShannonEntropy:
    def test_two_equal_halves_one_bit(self):
        values = np.array([0.0, 0.0, 1.0, 1.0])
        assert shannon_entropy(values, bins=2) == pytest.approx(1.0)

    def test_constant_window_zero(self):
        assert shannon_entropy(np.full(50, 3.7)) == 0.0

    def test_uniform_over_16_bins_four_bits(self):
        # one sample per bin center: maximal entropy for the default bin count
        edges = np.linspace(0.0, 1.0, 17)
        centers = (edges[:-1] + edges[1:]) / 2
        assert shannon_entropy(centers) == pytest.approx(4.0)

    def test_matches_reference_loop(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            values = rng.normal(size=rng.integers(10, 200))
            assert shannon_entropy(values) == pytest.approx(
                shannon_entropy_reference(values), abs=1e-12
            )

    def test_rejects_empty_and_non_finite(self):
        with pytest.raises(UsageError):
            shannon_entropy(np.array([]))
        with pytest.raises(UsageError):
            shannon_entropy(np.array([1.0, np.nan]))


class TestImuFeatures:
    def test_moments_match_two_pass_oracle(self):
        rng = np.random.default_rng(4)
        window = rng.normal(size=(128, 6))
        fv = extract_imu_features(window)
        group = fv.groups["accel"]
        flat = window[:, :3].ravel()
        assert group.mean == pytest.approx(flat.mean())
        assert group.variance == pytest.approx(((flat - flat.mean()) ** 2).mean())
        assert group.std == pytest.approx(np.sqrt(group.variance))
        assert group.sma == pytest.approx(np.abs(flat).sum() / len(window))

    def test_six_columns_split_into_accel_and_gyro(self):
        window = np.zeros((10, 6))
        window[:, 3:] = 2.0
        fv = extract_imu_features(window)
        assert set(fv.groups) == {"accel", "gyro"}
        assert fv.groups["accel"].mean == 0.0
        assert fv.groups["gyro"].mean == 2.0

    def test_vector_order_is_stable(self):
        rng = np.random.default_rng(2)
        window = rng.normal(size=(32, 6))
        fv = extract_imu_features(window)
        arr = fv.as_array()
        assert arr.shape == (10,)
        assert arr[0] == pytest.approx(fv.groups["accel"].mean)
        assert arr[5] == pytest.approx(fv.groups["gyro"].mean)


class TestSlidingEntropy:
    def test_constant_signal_yields_zeros(self):
        ts = np.arange(100, dtype=np.int64) * 10_000_000
        series = TimeSeries(ts, np.ones(100))
        out = sliding_entropy(series, window_ns=200_000_000, stride_ns=100_000_000)
        assert np.all(out.values == 0.0)

    def test_timestamps_are_window_centers(self):
        ts = np.arange(50, dtype=np.int64) * 10_000_000
        series = TimeSeries(ts, np.sin(np.arange(50.0)))
        window = 200_000_000
        out = sliding_entropy(series, window_ns=window, stride_ns=window)
        assert out.timestamps[0] == ts[0] + window // 2

    def test_burst_raises_entropy_above_quiet_floor(self):
        rng = np.random.default_rng(7)
        ts = np.arange(400, dtype=np.int64) * 10_000_000
        values = np.zeros(400)
        values[200:240] = rng.normal(0, 3.0, size=40)
        series = TimeSeries(ts, values)
        out = sliding_entropy(series, window_ns=300_000_000, stride_ns=50_000_000)
        quiet = out.values[:10].max()
        assert out.values.max() > quiet + 1.0

    def test_faint_noise_floor_scores_near_zero(self):
        # bins anchor to the series range, so a noisy but small baseline
        # stays in one cell instead of spreading across its own tiny span
        rng = np.random.default_rng(11)
        ts = np.arange(400, dtype=np.int64) * 10_000_000
        values = rng.normal(0, 0.01, size=400)
        values[200:300] += 5.0 * np.sin(np.linspace(0, 3 * np.pi, 100))
        series = TimeSeries(ts, values)
        out = sliding_entropy(series, window_ns=300_000_000, stride_ns=50_000_000)
        assert out.values[:8].max() < 0.5
        assert out.values.max() > 2.0

    def test_window_below_three_periods_rejected(self):
        ts = np.arange(20, dtype=np.int64) * 10_000_000
        series = TimeSeries(ts, np.ones(20))
        with pytest.raises(UsageError):
            sliding_entropy(series, window_ns=20_000_000, stride_ns=10_000_000)


class TestLowpass:
    def test_dc_signal_passes_unchanged(self):
        ts = np.arange(200, dtype=np.int64) * 10_000_000
        series = TimeSeries(ts, np.full(200, 5.0))
        out = butterworth_lowpass(series, order=4, cutoff_hz=5.0)
        assert np.allclose(out.values, 5.0, atol=1e-9)

    def test_high_frequency_attenuated_low_preserved(self):
        rate = 100.0
        n = 1000
        t = np.arange(n) / rate
        low = np.sin(2 * np.pi * 1.0 * t)
        high = np.sin(2 * np.pi * 40.0 * t)
        ts = (t * 1e9).round().astype(np.int64)
        out = butterworth_lowpass(TimeSeries(ts, low + high), order=4, cutoff_hz=5.0)
        residual_low = out.values[100:-100] - low[100:-100]
        assert np.abs(residual_low).max() < 0.05

    def test_half_power_at_cutoff(self):
        # the squared magnitude response of the designed filter is 1/2 at the cutoff
        b, a = design_lowpass(order=2, cutoff_hz=5.0, sample_rate_hz=100.0)
        w, h = freqz(b, a, worN=[5.0], fs=100.0)
        assert np.abs(h[0]) ** 2 == pytest.approx(0.5, abs=1e-9)

    def test_unit_gain_at_dc(self):
        b, a = design_lowpass(order=3, cutoff_hz=8.0, sample_rate_hz=100.0)
        assert np.sum(b) / np.sum(a) == pytest.approx(1.0)
        steady = lfilter(b, a, np.ones(500))[-1]
        assert steady == pytest.approx(1.0, abs=1e-6)

    def test_cutoff_at_or_above_nyquist_rejected(self):
        ts = np.arange(100, dtype=np.int64) * 10_000_000
        series = TimeSeries(ts, np.zeros(100))
        with pytest.raises(ConfigError):
            butterworth_lowpass(series, order=4, cutoff_hz=50.0)
        with pytest.raises(ConfigError):
            design_lowpass(order=0, cutoff_hz=5.0, sample_rate_hz=100.0)

    def test_multichannel_filtered_per_column(self):
        ts = np.arange(300, dtype=np.int64) * 10_000_000
        values = np.column_stack([np.full(300, 1.0), np.full(300, -2.0)])
        out = butterworth_lowpass(TimeSeries(ts, values), order=2, cutoff_hz=3.0)
        assert np.allclose(out.values[:, 0], 1.0, atol=1e-9)
        assert np.allclose(out.values[:, 1], -2.0, atol=1e-9)
