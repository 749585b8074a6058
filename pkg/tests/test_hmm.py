import numpy as np
import pytest

from oracles import viterbi_brute_force
from sensorstack.errors import ConfigError, UsageError
from sensorstack.eventsync import HmmModel, train_hmm, viterbi_decode


def sample_sequence(rng, model, length):
    """Draw one observation sequence from a diagonal-Gaussian state machine."""
    states = np.zeros(length, dtype=int)
    obs = np.zeros((length, model.means.shape[1]))
    states[0] = rng.choice(len(model.start), p=model.start)
    for t in range(1, length):
        states[t] = rng.choice(len(model.start), p=model.transitions[states[t - 1]])
    for t in range(length):
        obs[t] = rng.normal(model.means[states[t]], np.sqrt(model.variances[states[t]]))
    return obs, states


def two_state_model():
    return HmmModel(
        start=np.array([0.7, 0.3]),
        transitions=np.array([[0.9, 0.1], [0.2, 0.8]]),
        means=np.array([[0.0], [4.0]]),
        variances=np.array([[0.5], [0.5]]),
    )


class TestTraining:
    def test_log_likelihood_never_decreases(self):
        rng = np.random.default_rng(0)
        truth = two_state_model()
        seqs = [sample_sequence(rng, truth, 80)[0] for _ in range(4)]
        result = train_hmm(seqs, n_states=2, iterations=15, seed=1)
        diffs = np.diff(result.log_likelihoods)
        assert np.all(diffs >= -1e-8), result.log_likelihoods

    def test_two_state_parameters_recovered(self):
        rng = np.random.default_rng(42)
        truth = two_state_model()
        seqs = [sample_sequence(rng, truth, 300)[0] for _ in range(8)]
        result = train_hmm(seqs, n_states=2, iterations=40, seed=3)
        model = result.model
        # well-separated states make label switching a simple 2-permutation
        order = np.argsort(model.means[:, 0])
        means = model.means[order, 0]
        trans = model.transitions[np.ix_(order, order)]
        assert np.allclose(means, [0.0, 4.0], atol=0.1)
        assert np.allclose(trans, truth.transitions, atol=0.1)
        assert np.allclose(model.variances[order, 0], 0.5, atol=0.1)

    def test_single_state_collapses_to_global_moments(self):
        rng = np.random.default_rng(8)
        data = rng.normal(1.5, 2.0, size=(200, 1))
        result = train_hmm([data], n_states=1, iterations=5, seed=0)
        assert result.model.means[0, 0] == pytest.approx(data.mean(), abs=1e-6)
        assert result.model.variances[0, 0] == pytest.approx(data.var(), rel=1e-4)

    def test_seed_determinism(self):
        rng = np.random.default_rng(6)
        seqs = [rng.normal(size=(50, 2)) for _ in range(3)]
        a = train_hmm(seqs, n_states=3, iterations=5, seed=9)
        b = train_hmm(seqs, n_states=3, iterations=5, seed=9)
        assert np.array_equal(a.model.means, b.model.means)
        assert a.log_likelihoods == b.log_likelihoods

    def test_variance_floor_holds_on_degenerate_data(self):
        data = np.zeros((40, 1))
        result = train_hmm([data], n_states=2, iterations=10, seed=0)
        assert np.all(result.model.variances >= 1e-6)

    def test_empty_input_rejected(self):
        with pytest.raises(UsageError):
            train_hmm([], n_states=2)


class TestViterbi:
    def test_matches_brute_force_enumeration(self):
        rng = np.random.default_rng(5)
        for trial in range(25):
            n_states = int(rng.integers(2, 4))
            start = rng.dirichlet(np.ones(n_states))
            transitions = rng.dirichlet(np.ones(n_states), size=n_states)
            means = rng.normal(size=(n_states, 1)) * 3
            variances = rng.uniform(0.3, 1.5, size=(n_states, 1))
            model = HmmModel(start, transitions, means, variances)
            obs = rng.normal(size=(int(rng.integers(2, 9)), 1))
            got = viterbi_decode(model, obs)
            want_states, want_ll = viterbi_brute_force(
                start, transitions, means, variances, obs
            )
            assert got.log_likelihood == pytest.approx(want_ll, abs=1e-9), f"trial {trial}"
            assert list(got.states) == list(want_states)

    def test_decodes_planted_segments(self):
        rng = np.random.default_rng(2)
        truth = two_state_model()
        obs, states = sample_sequence(rng, truth, 200)
        decoded = viterbi_decode(truth, obs)
        agreement = np.mean(np.array(decoded.states) == states)
        assert agreement > 0.9

    def test_dimension_mismatch_rejected(self):
        model = two_state_model()
        with pytest.raises(UsageError):
            viterbi_decode(model, np.zeros((5, 3)))


class TestModelValidation:
    def test_rows_must_be_distributions(self):
        with pytest.raises(ConfigError):
            HmmModel(
                start=np.array([0.5, 0.6]),
                transitions=np.array([[0.9, 0.1], [0.2, 0.8]]),
                means=np.zeros((2, 1)),
                variances=np.ones((2, 1)),
            )
        with pytest.raises(ConfigError):
            HmmModel(
                start=np.array([0.5, 0.5]),
                transitions=np.array([[0.9, 0.2], [0.2, 0.8]]),
                means=np.zeros((2, 1)),
                variances=np.ones((2, 1)),
            )

    def test_non_positive_variance_rejected(self):
        with pytest.raises(ConfigError):
            HmmModel(
                start=np.array([1.0]),
                transitions=np.array([[1.0]]),
                means=np.zeros((1, 1)),
                variances=np.zeros((1, 1)),
            )

    def test_json_round_trip(self):
        model = two_state_model()
        restored = HmmModel.from_json(model.to_json())
        assert np.array_equal(restored.start, model.start)
        assert np.array_equal(restored.transitions, model.transitions)
        assert np.array_equal(restored.means, model.means)
        assert np.array_equal(restored.variances, model.variances)
