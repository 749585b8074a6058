import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import full_sort_pairing, ols_line_fit
from sensorstack.errors import ConfigError, DomainError, UsageError
from sensorstack import timebase as tb
from sensorstack.timebase import (
    AlignedFrame,
    BufferPolicy,
    ClockModel,
    NoiseConfig,
    SampleStream,
    SensorSample,
    StreamDescriptor,
    align_streams,
    buffer_size,
    correct_timestamp,
    kalman_update,
    read_streams_ndjson,
    write_samples_ndjson,
)

NS = tb.NS_PER_SEC


def make_stream(device, modality, ts_list, payloads=None, rate=100.0, corrected=True):
    payloads = payloads or [(float(i),) for i in range(len(ts_list))]
    samples = tuple(
        SensorSample(device, modality, int(t), p, corrected_ts=int(t) if corrected else None)
        for t, p in zip(ts_list, payloads)
    )
    return SampleStream(StreamDescriptor(device, modality, rate), samples)


class TestCorrectTimestamp:
    def test_identity_model_is_noop(self):
        model = ClockModel.identity(anchor=0)
        assert correct_timestamp(1234, model) == 1234

    def test_offset_and_drift_arithmetic(self):
        # 400 ms offset plus 1e-3 drift over 100 s adds exactly 500 ms
        anchor = 50 * NS
        model = ClockModel(0.4, 1e-3, anchor, np.zeros((2, 2)))
        local = anchor + 100 * NS
        assert correct_timestamp(local, model) == local + 500_000_000

    def test_sample_before_anchor_rejected(self):
        model = ClockModel.identity(anchor=10 * NS)
        with pytest.raises(DomainError, match="precedes sync anchor"):
            correct_timestamp(10 * NS - 1, model)

    @given(
        offset=st.floats(-10.0, 10.0),
        drift=st.floats(-0.09, 0.09),
        base=st.integers(0, 10**12),
        gap=st.integers(2, 10**9),
    )
    @settings(max_examples=200, deadline=None)
    def test_strictly_monotone_for_separated_samples(self, offset, drift, base, gap):
        model = ClockModel(offset, drift, 0, np.zeros((2, 2)))
        a = correct_timestamp(base, model)
        b = correct_timestamp(base + gap, model)
        assert b > a

    def test_round_trip_with_inverse_model(self):
        model = ClockModel(0.31415, 4.2e-5, 7 * NS, np.zeros((2, 2)))
        inverse = model.inverse()
        for local in [7 * NS, 8 * NS + 123, 3600 * NS + 999_999_937]:
            corrected = correct_timestamp(local, model)
            back = correct_timestamp(corrected, inverse)
            assert abs(back - local) <= 1

    def test_drift_bound_enforced(self):
        with pytest.raises(DomainError):
            ClockModel(0.0, 0.2, 0, np.zeros((2, 2)))


def spaced_times(rng, count, period_s):
    """Jittered periodic probe times with a guaranteed minimum gap."""
    jitter = rng.uniform(-0.25 * period_s, 0.25 * period_s, size=count)
    return [round(((i + 1) * period_s + j) * NS) for i, j in enumerate(jitter)]


def linear_observations(offset, drift, times_ns, noise_s=None):
    obs = []
    for i, t in enumerate(times_ns):
        err = offset + drift * (t / NS)
        if noise_s is not None:
            err += noise_s[i]
        obs.append((int(t), int(t) + round(err * NS)))
    return obs


def run_filter(obs, model, noise):
    for pair in obs:
        model = kalman_update(model, pair, noise)
    return model


class TestKalmanUpdate:
    def test_noiseless_linear_clock_recovered(self):
        # exact linear clock: 250 ms offset, 5e-4 drift, 20 samples over 60 s.
        # Times are multiples of 2 ms so drift * t is a whole nanosecond count
        # and the observations carry no quantization error at all.
        truth_offset, truth_drift = 0.25, 5e-4
        times = [round(i * 60 / 19 * 500) * 2_000_000 for i in range(20)]
        obs = [(t, t + 250_000_000 + round(truth_drift * t)) for t in times]
        model = ClockModel.initial(0, offset_var=1e8, drift_var=1e2)
        noise = NoiseConfig(0.0, 0.0, 1e-12)
        model = run_filter(obs, model, noise)
        at_origin = model.at_anchor(0)
        assert abs(at_origin.offset - truth_offset) / truth_offset < 1e-9
        assert abs(at_origin.drift_rate - truth_drift) / truth_drift < 1e-9
        taus = [local / NS for local, _ in obs]
        zs = [(ref - local) / NS for local, ref in obs]
        intercept, slope = ols_line_fit(taus, zs)
        assert abs(at_origin.offset - intercept) < 1e-9 * abs(intercept)
        assert abs(at_origin.drift_rate - slope) < 1e-9 * abs(slope)

    def test_matches_least_squares_oracle_on_noisy_data(self):
        rng = np.random.default_rng(7)
        times = spaced_times(rng, count=100, period_s=1.2)
        noise = rng.normal(0.0, 0.005, size=100)
        obs = linear_observations(0.4, -2e-5, times, noise)
        model = ClockModel.initial(0, offset_var=1e8, drift_var=1e2)
        model = run_filter(obs, model, NoiseConfig(0.0, 0.0, 1e-4))
        taus = [(local / NS) for local, _ in obs]
        zs = [(ref - local) / NS for local, ref in obs]
        intercept, slope = ols_line_fit(taus, zs)
        at_origin = model.at_anchor(0)
        assert abs(at_origin.offset - intercept) <= 1e-6 * max(1.0, abs(intercept))
        assert abs(at_origin.drift_rate - slope) <= 1e-6 * max(1.0, abs(slope))

    def test_covariance_trace_non_increasing_for_repeated_observation(self):
        model = ClockModel.initial(0)
        noise = NoiseConfig()
        obs = (5 * NS, 5 * NS + 300_000_000)
        traces = []
        for _ in range(20):
            model = kalman_update(model, obs, noise)
            traces.append(float(np.trace(model.covariance)))
        diffs = np.diff(traces)
        assert np.all(diffs <= 1e-15)

    def test_offset_recovery_under_gaussian_noise(self):
        # mean |error at the centroid time| stays within 3*sigma/sqrt(n)
        sigma, n = 0.005, 50
        truth_offset, truth_drift = 0.3, 3e-5
        errors = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            times = spaced_times(rng, count=n, period_s=1.8)
            noise = rng.normal(0.0, sigma, size=n)
            obs = linear_observations(truth_offset, truth_drift, times, noise)
            model = ClockModel.initial(0, offset_var=1e8, drift_var=1e2)
            model = run_filter(obs, model, NoiseConfig(0.0, 0.0, sigma**2))
            centroid = int(np.mean([local for local, _ in obs]))
            est = model.at_anchor(centroid).offset
            truth_at_centroid = truth_offset + truth_drift * centroid / NS
            errors.append(abs(est - truth_at_centroid))
        assert float(np.mean(errors)) < 3 * sigma / math.sqrt(n)

    def test_anchor_moves_to_observation_time(self):
        model = ClockModel.initial(0)
        updated = kalman_update(model, (3 * NS, 3 * NS + 1000), NoiseConfig())
        assert updated.last_sync == 3 * NS

    def test_observation_before_anchor_rejected(self):
        model = ClockModel.identity(anchor=NS)
        with pytest.raises(DomainError):
            kalman_update(model, (NS - 5, NS), NoiseConfig())

    def test_nonpositive_measurement_variance_rejected(self):
        with pytest.raises(ConfigError):
            NoiseConfig(measurement_var=0.0)
        with pytest.raises(ConfigError):
            NoiseConfig(process_offset_var=-1.0)

    def test_covariance_must_be_psd(self):
        with pytest.raises(ConfigError):
            ClockModel(0.0, 0.0, 0, np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestBufferSize:
    def test_floor_applies_when_jitter_small(self):
        policy = BufferPolicy(b_min=10_000_000, beta=3.0, window=50)
        constant = [10_000_000] * 20
        assert buffer_size(policy, constant) == 10_000_000

    def test_scaled_jitter_beats_floor(self):
        # deviations (+20,-20,+20,-20,0) ms give a sample std of exactly 20 ms
        policy = BufferPolicy(b_min=10_000_000, beta=3.0, window=50)
        ms = 1_000_000
        intervals = [70 * ms, 30 * ms, 70 * ms, 30 * ms, 50 * ms]
        assert buffer_size(policy, intervals) == 60 * ms

    def test_too_few_intervals_falls_back_to_floor(self):
        policy = BufferPolicy(b_min=7_000_000, beta=5.0, window=50)
        assert buffer_size(policy, []) == 7_000_000
        assert buffer_size(policy, [123]) == 7_000_000

    def test_only_recent_window_counts(self):
        policy = BufferPolicy(b_min=1, beta=1.0, window=4)
        noisy_then_steady = [0, 10**9, 0, 10**9] + [500] * 4
        assert buffer_size(policy, noisy_then_steady) == 1

    @given(
        intervals=st.lists(st.integers(0, 10**9), min_size=2, max_size=30),
        scale=st.integers(2, 5),
    )
    @settings(max_examples=100, deadline=None)
    def test_buffer_scales_linearly_with_beta(self, intervals, scale):
        base = BufferPolicy(b_min=1, beta=1.0, window=50)
        scaled = BufferPolicy(b_min=1, beta=float(scale), window=50)
        b1 = buffer_size(base, intervals)
        b2 = buffer_size(scaled, intervals)
        sd = float(np.std(np.asarray(intervals[-50:], dtype=float), ddof=1))
        assert b2 == max(1, round(scale * sd))
        assert b1 == max(1, round(sd))

    def test_policy_validation(self):
        with pytest.raises(ConfigError):
            BufferPolicy(b_min=0, beta=1.0)
        with pytest.raises(ConfigError):
            BufferPolicy(b_min=1, beta=-1.0)
        with pytest.raises(ConfigError):
            BufferPolicy(b_min=1, beta=1.0, window=1)


class TestAlignStreams:
    def test_two_steady_streams_pair_up(self):
        fast = make_stream("imu-1", "imu", [i * 10_000_000 for i in range(101)])
        slow = make_stream("cam-1", "camera_series", [i * 40_000_000 for i in range(26)])
        policy = BufferPolicy(b_min=50_000_000, beta=3.0, window=20)
        frames = align_streams([fast, slow], policy, epoch_ns=100_000_000)
        assert all(isinstance(f, AlignedFrame) for f in frames)
        times = [f.time for f in frames]
        assert times == sorted(times)
        interior = frames[1:-1]
        assert all(f.slots["imu-1/imu"] is not None for f in interior)
        assert all(f.slots["cam-1/camera_series"] is not None for f in interior)

    def test_delayed_stream_marked_absent(self):
        steady = make_stream("imu-1", "imu", [i * 10_000_000 for i in range(100)])
        # stalls after 200 ms, so later frames exceed any plausible buffer
        stalled = make_stream("cam-1", "camera_series", [i * 40_000_000 for i in range(6)])
        policy = BufferPolicy(b_min=50_000_000, beta=2.0, window=20)
        frames = align_streams([steady, stalled], policy, epoch_ns=100_000_000)
        last = frames[-1]
        assert last.slots["imu-1/imu"] is not None
        assert last.slots["cam-1/camera_series"] is None

    def test_uncorrected_stream_rejected(self):
        raw = make_stream("imu-1", "imu", [0, 10], corrected=False)
        with pytest.raises(UsageError, match="uncorrected"):
            align_streams([raw], BufferPolicy(b_min=1, beta=0.0), epoch_ns=10)

    def test_matches_full_sort_oracle_on_jittered_streams(self):
        rng = np.random.default_rng(42)
        policy = BufferPolicy(b_min=60_000_000, beta=3.0, window=30)
        epoch = 100_000_000

        def jittered(period_ns, count):
            ts = np.cumsum(rng.integers(period_ns // 2, period_ns * 3 // 2, size=count))
            return [int(t) for t in ts]

        cam_ts = jittered(33_000_000, 90)
        imu_ts = jittered(10_000_000, 300)
        cam = make_stream("cam-1", "camera_series", cam_ts)
        imu = make_stream("imu-1", "imu", imu_ts)
        frames = align_streams([cam, imu], policy, epoch)
        frame_times = [f.time for f in frames]

        for key, ts_list in [("cam-1/camera_series", cam_ts), ("imu-1/imu", imu_ts)]:
            def staleness(idx, ts_list=ts_list):
                lo = max(0, idx - policy.window)
                ivals = np.diff(ts_list[lo : idx + 1]).tolist()
                return buffer_size(policy, ivals)

            expected = full_sort_pairing(ts_list, frame_times, staleness)
            got = [
                None if f.slots[key] is None else ts_list.index(f.slots[key].corrected_ts)
                for f in frames
            ]
            assert got == expected


class TestStreamsAndIo:
    def test_stream_validation(self):
        with pytest.raises(UsageError):
            make_stream("d", "imu", [10, 5])
        with pytest.raises(UsageError):
            SensorSample("d", "sonar", 0, (1.0,))
        s1 = SensorSample("d", "imu", 0, (1.0, 2.0))
        s2 = SensorSample("d", "imu", 1, (1.0,))
        with pytest.raises(UsageError, match="arity"):
            SampleStream(StreamDescriptor("d", "imu", 10.0), (s1, s2))

    def test_with_clock_fills_corrected(self):
        stream = make_stream("d", "imu", [0, 10_000_000], corrected=False)
        model = ClockModel(0.001, 0.0, 0, np.zeros((2, 2)))
        corrected = stream.with_clock(model)
        assert [s.corrected_ts for s in corrected.samples] == [1_000_000, 11_000_000]

    def test_ndjson_round_trip(self):
        stream = make_stream("imu-7", "imu", [5, 15, 25], payloads=[(0.5, 1.5)] * 3)
        stream = SampleStream(
            stream.descriptor,
            tuple(
                SensorSample(
                    s.device_id, s.modality, s.local_ts, s.payload,
                    corrected_ts=s.corrected_ts, location=(40.0, -70.0),
                )
                for s in stream.samples
            ),
        )
        buf = io.StringIO()
        write_samples_ndjson(stream.samples, buf)
        buf.seek(0)
        restored = read_streams_ndjson(buf)
        assert set(restored) == {"imu-7/imu"}
        got = restored["imu-7/imu"]
        assert [s.local_ts for s in got.samples] == [5, 15, 25]
        assert got.samples[0].payload == (0.5, 1.5)
        assert got.samples[0].location == (40.0, -70.0)
        assert got.samples[0].corrected_ts == 5

    def test_record_field_names(self):
        sample = SensorSample("cam-1", "camera_series", 123, (9.0,), location=(1.0, 2.0))
        record = tb.sample_to_record(sample)
        assert set(record) == {"device_id", "modality", "local_ts_ns", "payload", "lat", "lon"}
