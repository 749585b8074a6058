import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dtw_enumerate
from sensorstack.errors import UsageError
from sensorstack.eventsync import GestureTemplate, TimeSeries, dba, dba_template, dtw_distance
from sensorstack.eventsync.dtw import dtw_cost


def valid_warp_path(path, n, m):
    if path[0] != (0, 0) or path[-1] != (n - 1, m - 1):
        return False
    for (i0, j0), (i1, j1) in zip(path, path[1:]):
        if (i1 - i0, j1 - j0) not in {(1, 0), (0, 1), (1, 1)}:
            return False
    return True


class TestDtwDistance:
    def test_constant_step_example(self):
        result = dtw_distance([0.0, 0.0], [1.0, 1.0], "abs")
        assert result.cost == pytest.approx(2.0)

    def test_repeated_value_absorbed_for_free(self):
        result = dtw_distance([1.0, 2.0, 3.0], [1.0, 2.0, 2.0, 3.0], "abs")
        assert result.cost == 0.0

    def test_identical_sequences_diagonal_path(self):
        seq = [0.3, 1.7, -2.0, 0.4]
        result = dtw_distance(seq, seq)
        assert result.cost == 0.0
        assert list(result.path) == [(i, i) for i in range(len(seq))]

    def test_matches_exhaustive_enumeration(self):
        # every optimal cost agrees with brute-force search over all paths
        rng = np.random.default_rng(11)
        for _ in range(60):
            n = int(rng.integers(1, 7))
            m = int(rng.integers(1, 7))
            s = rng.normal(size=n).round(3)
            t = rng.normal(size=m).round(3)
            expected = dtw_enumerate(s, t, lambda a, b: abs(a - b))
            got = dtw_distance(s, t, "abs")
            assert got.cost == pytest.approx(expected, abs=1e-12)
            assert valid_warp_path(got.path, n, m)

    def test_cost_only_variant_agrees(self):
        rng = np.random.default_rng(3)
        s = rng.normal(size=40)
        t = rng.normal(size=55)
        assert dtw_cost(s, t, "abs") == pytest.approx(dtw_distance(s, t, "abs").cost)

    def test_vector_sequences_euclidean(self):
        s = np.array([[0.0, 0.0], [1.0, 0.0]])
        t = np.array([[0.0, 0.0], [1.0, 0.0]])
        assert dtw_distance(s, t).cost == 0.0

    def test_callable_metric(self):
        result = dtw_distance([1.0, 2.0], [2.0, 4.0], lambda a, b: (a - b) ** 2)
        expected = dtw_enumerate([1.0, 2.0], [2.0, 4.0], lambda a, b: (a - b) ** 2)
        assert result.cost == pytest.approx(expected)

    def test_empty_sequence_rejected(self):
        with pytest.raises(UsageError):
            dtw_distance([], [1.0])

    @given(
        s=st.lists(st.floats(-5, 5), min_size=1, max_size=12),
        t=st.lists(st.floats(-5, 5), min_size=1, max_size=12),
    )
    @settings(max_examples=120, deadline=None)
    def test_symmetry_and_path_validity(self, s, t):
        fwd = dtw_distance(s, t, "abs")
        rev = dtw_distance(t, s, "abs")
        assert fwd.cost == pytest.approx(rev.cost, abs=1e-9)
        assert valid_warp_path(fwd.path, len(s), len(t))
        assert fwd.cost >= 0.0


def warped_pulse(rng, length=60):
    """A smooth pulse with a random time warp applied."""
    base = np.linspace(0, 1, length)
    warp = np.interp(base, [0, rng.uniform(0.3, 0.7), 1], [0, rng.uniform(0.3, 0.7), 1])
    return np.exp(-((warp - 0.5) ** 2) / 0.02)


class TestDba:
    def test_single_sequence_is_fixed_point(self):
        seq = np.array([0.0, 1.0, 3.0, 0.5])
        result = dba([seq], iterations=5)
        assert np.allclose(result.barycenter, seq)

    def test_two_constant_sequences_average(self):
        a = np.full(6, 2.0)
        b = np.full(6, 4.0)
        result = dba([a, b], iterations=3)
        assert np.allclose(result.barycenter, 3.0)

    def test_objective_never_increases_on_random_sets(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            seqs = [rng.normal(size=rng.integers(20, 40)) for _ in range(5)]
            result = dba(seqs, iterations=8)
            diffs = np.diff(result.costs)
            assert np.all(diffs <= 1e-9), f"seed {seed}: {result.costs}"

    def test_template_beats_arithmetic_mean_on_warped_pulses(self):
        rng = np.random.default_rng(5)
        seqs = [warped_pulse(rng) for _ in range(5)]
        result = dba(seqs, iterations=10)
        mean = np.mean(seqs, axis=0)
        dba_total = sum(dtw_cost(result.barycenter, s, "abs") for s in seqs)
        mean_total = sum(dtw_cost(mean, s, "abs") for s in seqs)
        assert dba_total <= mean_total

    def test_template_wrapper_infers_rate(self):
        ts = np.arange(20) * 40_000_000
        series = [TimeSeries(ts, warped_pulse(np.random.default_rng(s), 20)) for s in range(3)]
        template = dba_template(series, iterations=4)
        assert template.sample_rate_hz == pytest.approx(25.0)
        assert template.dtw_threshold == 0.8

    def test_template_serialization_round_trip(self):
        template = GestureTemplate(np.array([0.0, 0.5, 1.0]), 25.0, 0.7)
        restored = GestureTemplate.from_json(template.to_json())
        assert np.array_equal(restored.values, template.values)
        assert restored.sample_rate_hz == template.sample_rate_hz
        assert restored.dtw_threshold == template.dtw_threshold

    def test_bare_arrays_need_explicit_rate(self):
        with pytest.raises(UsageError):
            dba_template([np.ones(4)], iterations=1)
