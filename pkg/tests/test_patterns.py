"""Pattern generation, receptive-field encoding, and spike conversion."""

import hashlib
import math

import numpy as np
import pytest

from branchlearn.patterns import (BinaryPattern, SpikePattern, TaskSpec,
                                  gaussian_rf_boundaries, generate_random_task,
                                  patterns_to_matrix, rf_encode, to_rate_spikes,
                                  to_single_spikes)


class TestRfEncode:
    def test_one_hot_sums_to_one(self):
        rng = np.random.default_rng(0)
        boundaries = gaussian_rf_boundaries(10)
        for value in rng.normal(size=200):
            assert rf_encode(value, boundaries).sum() == 1

    def test_boundary_value_belongs_to_lower_interval(self):
        # Phi^-1(0.5) = 0 sits exactly on the fifth boundary (index 4); the
        # tie rule (lower-exclusive, upper-inclusive) puts it in interval 4.
        boundaries = gaussian_rf_boundaries(10)
        assert boundaries[4] == 0.0
        out = rf_encode(0.0, boundaries)
        assert out[4] == 1

    def test_extremes(self):
        boundaries = gaussian_rf_boundaries(10)
        assert rf_encode(-1e9, boundaries)[0] == 1
        assert rf_encode(+1e9, boundaries)[-1] == 1

    def test_non_ascending_boundaries_rejected(self):
        with pytest.raises(ValueError):
            rf_encode(0.0, np.array([1.0, 0.5]))


class TestGenerateRandomTask:
    def test_reference_shape_and_density(self):
        spec = TaskSpec(d_o=40, n_rf=10, n_patterns=1000, seed=7)
        patterns = generate_random_task(spec)
        assert len(patterns) == 1000
        for p in patterns[:50]:
            assert p.d == 400
            assert p.bits.sum() == 40
            # exactly one active bit per receptive-field group
            assert (p.bits.reshape(40, 10).sum(axis=1) == 1).all()

    def test_single_rf_is_always_active(self):
        patterns = generate_random_task(TaskSpec(d_o=1, n_rf=1, n_patterns=2))
        for p in patterns:
            assert p.bits.tolist() == [1]

    def test_activation_probability_matches_rf_count(self):
        # law of large numbers: P(bit=1) = 1/n_rf = 0.5 within 0.02
        spec = TaskSpec(d_o=2, n_rf=2, n_patterns=10000, seed=3)
        X, _ = patterns_to_matrix(generate_random_task(spec))
        freq = X.mean(axis=0)
        assert np.all(np.abs(freq - 0.5) < 0.02)

    def test_seed_determinism_frozen_digest(self):
        spec = TaskSpec(d_o=5, n_rf=4, n_patterns=20, seed=123)
        X, labels = patterns_to_matrix(generate_random_task(spec))
        digest = hashlib.sha256(X.tobytes() + labels.tobytes()).hexdigest()
        # frozen once from the fixed seed path; PCG64 streams are platform-stable
        assert digest == _FROZEN_TASK_DIGEST

    def test_both_classes_present(self):
        for seed in range(10):
            spec = TaskSpec(d_o=2, n_rf=2, n_patterns=4, seed=seed)
            labels = [p.label for p in generate_random_task(spec)]
            assert 0 < sum(labels) < len(labels)


_FROZEN_TASK_DIGEST = "e00bd027d7d0c22c4c49e888430f978deab498929b4f8d1b4f5b97cb9c635293"


class TestRateSpikes:
    def test_expected_count_at_high_rate(self):
        # 250 Hz over 200 ms -> mean 50 per afferent; 1000 afferents tighten
        # the sample mean to 50 +- 3*sigma/sqrt(1000) ~ [47, 53]
        bits = np.ones(1000, dtype=np.uint8)
        sp = to_rate_spikes(BinaryPattern(bits, 1), 250.0, 1.0, 200.0, seed=5)
        mean_count = sp.counts().mean()
        assert 47 < mean_count < 53

    def test_zero_rate_is_silent(self):
        sp = to_rate_spikes(BinaryPattern(np.zeros(8, dtype=np.uint8), 0),
                            250.0, 0.0, 200.0, seed=1)
        assert sp.counts().sum() == 0

    def test_times_inside_window_and_sorted(self):
        sp = to_rate_spikes(BinaryPattern(np.ones(20, dtype=np.uint8), 1),
                            250.0, 1.0, 200.0, seed=2)
        for train in sp.spikes:
            assert np.all(train >= 0) and np.all(train <= 200.0)
            assert np.all(np.diff(train) > 0)

    def test_rate_must_exceed_low(self):
        with pytest.raises(ValueError):
            to_rate_spikes(BinaryPattern(np.ones(2, dtype=np.uint8), 1),
                           10.0, 10.0, 200.0)

    def test_poisson_count_distribution(self):
        # chi-square goodness of fit at the 1% level, >= 1e4 samples.
        # Bins of the Poisson(50) count distribution; critical value for
        # df=8 at alpha=0.01 is 20.090.
        counts = []
        bits = np.ones(100, dtype=np.uint8)
        for pid in range(100):
            sp = to_rate_spikes(BinaryPattern(bits, 1), 250.0, 0.0, 200.0,
                                seed=99, pattern_id=pid)
            counts.extend(sp.counts().tolist())
        counts = np.array(counts)
        assert len(counts) == 10000
        edges = [-np.inf, 40, 44, 47, 49, 51, 53, 56, 60, np.inf]
        observed = np.histogram(counts, bins=edges)[0]
        mean = 50.0

        def pois_cdf(x):
            ks = np.arange(0, int(x) + 1)
            logs = ks * math.log(mean) - mean - np.array(
                [math.lgamma(k + 1) for k in ks])
            return float(np.exp(logs).sum())

        probs = []
        prev = 0.0
        for edge in edges[1:-1]:
            c = pois_cdf(edge - 1)   # histogram bins are right-open on integers
            probs.append(c - prev)
            prev = c
        probs.append(1.0 - prev)
        expected = np.array(probs) * len(counts)
        chi2 = float(((observed - expected) ** 2 / expected).sum())
        assert chi2 < 20.090


class TestSingleSpikes:
    def test_zero_jitter_is_exact_and_deterministic(self):
        bits = np.array([1, 0, 1], dtype=np.uint8)
        sp = to_single_spikes(BinaryPattern(bits, 1), 100.0, 0.0, 200.0, seed=1)
        assert sp.spikes[0].tolist() == [100.0]
        assert len(sp.spikes[1]) == 0
        assert sp.spikes[2].tolist() == [100.0]

    def test_jitter_window(self):
        bits = np.ones(200, dtype=np.uint8)
        sp = to_single_spikes(BinaryPattern(bits, 1), 100.0, 8.0, 200.0, seed=4)
        times = np.concatenate(sp.spikes)
        assert np.all(times >= 96.0) and np.all(times <= 104.0)
        assert times.std() > 0.5   # actually spread, not degenerate

    def test_all_zero_pattern_is_empty(self):
        sp = to_single_spikes(BinaryPattern(np.zeros(5, dtype=np.uint8), 0),
                              100.0, 8.0, 200.0)
        assert sp.counts().sum() == 0

    def test_window_outside_duration_rejected(self):
        with pytest.raises(ValueError):
            to_single_spikes(BinaryPattern(np.ones(2, dtype=np.uint8), 1),
                             5.0, 20.0, 200.0)


class TestSpikePatternInvariants:
    def test_rejects_descending_times(self):
        with pytest.raises(ValueError):
            SpikePattern((np.array([5.0, 3.0]),), 10.0)

    def test_rejects_out_of_window(self):
        with pytest.raises(ValueError):
            SpikePattern((np.array([11.0]),), 10.0)
