"""Fitness computation, replacement selection, and the training loop."""

from itertools import product

import numpy as np
import pytest

from branchlearn import rngs
from branchlearn.learning import (LearnConfig, VectorEpoch, fitness_epoch, mae,
                                  replacement_step, train)
from branchlearn.model import (Connectome, ModelKind, NonlinearityConfig,
                               branch_activations, branch_output, g_heaviside,
                               random_connectome)


class TestMae:
    def test_perfect(self):
        assert mae([1, 1, 0], [1, 1, 0]) == 0.0

    def test_all_wrong(self):
        assert mae([1, 0], [0, 1]) == 1.0

    def test_quarter(self):
        assert mae([1, 0, 0, 0], [1, 1, 0, 0]) == 0.25

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mae([], [])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            mae([1], [1, 0])


def tiny_setup(seed=0, d=6, m=2, k=3, n_patterns=12):
    rng = np.random.default_rng(seed)
    X = (rng.random((n_patterns, d)) < 0.4).astype(np.uint8)
    labels = rng.integers(0, 2, size=n_patterns)
    labels[0], labels[1] = 1, 0   # both classes present
    conn = random_connectome(d, m, k, rng)
    cfg = LearnConfig(n_t=4, n_r=4, nonlinearity=NonlinearityConfig(), seed=seed)
    return X, labels, conn, cfg


def brute_force_fitness(X, labels, conn, cfg):
    """Direct per-slot computation of the error-modulated correlation."""
    nl, kind = cfg.nonlinearity, cfg.kind
    z_p = branch_activations(conn.plus, X.astype(float))
    z_m = branch_activations(conn.minus, X.astype(float))
    b_p = np.asarray(branch_output(z_p, nl, kind))
    b_m = np.asarray(branch_output(z_m, nl, kind))
    y = np.asarray(g_heaviside(b_p.sum(1) - b_m.sum(1)), dtype=float)
    e = np.sign(labels - y)
    out = {}
    for sign, table, b in ((+1, conn.plus, b_p), (-1, conn.minus, b_m)):
        c = np.zeros(table.shape)
        for j, slot in product(range(conn.m), range(conn.k)):
            line = table[j, slot]
            vals = X[:, line] * b[:, j] * e * (1 if sign > 0 else -1)
            c[j, slot] = vals.mean()
        out[sign] = c
    return out[+1], out[-1]


class TestFitness:
    def test_matches_brute_force(self):
        X, labels, conn, cfg = tiny_setup(3)
        c_p, c_m = fitness_epoch(X, labels, conn, cfg)
        ref_p, ref_m = brute_force_fitness(X, labels, conn, cfg)
        np.testing.assert_allclose(c_p, ref_p, atol=1e-12)
        np.testing.assert_allclose(c_m, ref_m, atol=1e-12)

    def test_correct_pattern_contributes_zero(self):
        # single pattern classified exactly right -> zero error signal
        X = np.array([[1, 0]], dtype=np.uint8)
        labels = np.array([1])
        conn = Connectome(plus=np.array([[0, 0]]), minus=np.array([[1, 1]]), d=2)
        cfg = LearnConfig(nonlinearity=NonlinearityConfig())
        c_p, c_m = fitness_epoch(X, labels, conn, cfg)
        assert np.all(c_p == 0) and np.all(c_m == 0)

    def test_miss_signs_and_magnitude(self):
        # o=1 misclassified; active slot on a branch with output 4 scores +4
        # for the (+) neuron and -4 for the matching (-) slot
        X = np.array([[1, 1, 0]], dtype=np.uint8)
        labels = np.array([1])
        cfg = LearnConfig(nonlinearity=NonlinearityConfig(exponent=2, x_thr=1.0))
        conn = Connectome(plus=np.array([[0, 1]]), minus=np.array([[0, 1]]), d=3)
        # a+ = a- = 4 -> y = 0 -> sgn(o - y) = +1; b_j = 4 on both
        c_p, c_m = fitness_epoch(X, labels, conn, cfg)
        np.testing.assert_allclose(c_p, 4.0)
        np.testing.assert_allclose(c_m, -4.0)

    def test_inactive_slot_scores_zero(self):
        X = np.array([[0, 1]], dtype=np.uint8)
        labels = np.array([1])
        conn = Connectome(plus=np.array([[0]]), minus=np.array([[1]]), d=2)
        cfg = LearnConfig(nonlinearity=NonlinearityConfig())
        c_p, _ = fitness_epoch(X, labels, conn, cfg)
        assert c_p[0, 0] == 0.0

    def test_antisymmetry_for_identical_wiring(self):
        # with both neurons wired identically, c- = -c+ slot for slot
        X, labels, conn, cfg = tiny_setup(5)
        twin = Connectome(conn.plus.copy(), conn.plus.copy(), conn.d)
        c_p, c_m = fitness_epoch(X, labels, twin, cfg)
        np.testing.assert_allclose(c_m, -c_p, atol=1e-12)


class TestReplacementStep:
    def test_exhaustive_limit_matches_brute_force(self):
        # n_t = s and n_r = d make the step deterministic: the globally worst
        # slot takes the globally best line, per neuron
        X, labels, conn, _ = tiny_setup(7, d=4, m=1, k=3, n_patterns=10)
        cfg = LearnConfig(n_t=3, n_r=4, nonlinearity=NonlinearityConfig())
        epoch = VectorEpoch(X, labels, conn, cfg)
        proposed = replacement_step(conn, epoch, cfg, rngs.stream(0, rngs.TRAINER))
        for sign in (+1, -1):
            c = epoch.fitness_flat(sign)
            worst = int(np.flatnonzero(c == c.min()).min())
            branch, slot = divmod(worst, conn.k)
            scores = epoch.candidate_scores(sign, branch, np.arange(4))
            best_line = int(np.flatnonzero(scores == scores.max()).min())
            changed = proposed.table(sign) != conn.table(sign)
            # only the worst slot may change, and to the best line
            assert changed.sum() <= 1
            assert proposed.table(sign)[branch, slot] == best_line

    def test_incumbent_can_be_redrawn(self):
        # with every line in R, the argmax may be the incumbent: a no-op
        X = np.array([[1, 0], [0, 1]], dtype=np.uint8)
        labels = np.array([1, 0])
        conn = Connectome(plus=np.array([[0]]), minus=np.array([[1]]), d=2)
        cfg = LearnConfig(n_t=1, n_r=2, nonlinearity=NonlinearityConfig())
        epoch = VectorEpoch(X, labels, conn, cfg)
        proposed = replacement_step(conn, epoch, cfg, rngs.stream(1, rngs.TRAINER))
        assert proposed.plus.shape == conn.plus.shape

    def test_misaligned_epoch_rejected(self):
        X, labels, conn, cfg = tiny_setup(1)
        epoch = VectorEpoch(X, labels, conn, cfg)
        other = random_connectome(conn.d, conn.m + 1, conn.k,
                                  np.random.default_rng(0))
        with pytest.raises(ValueError):
            replacement_step(other, epoch, cfg, np.random.default_rng(0))


def toy_task():
    X = np.eye(4, dtype=np.uint8)
    labels = np.array([1, 1, 0, 0])
    return X, labels


class TestTraining:
    def test_toy_task_reaches_zero(self):
        # a zero-error wiring exists (exhaustively verified), and training
        # finds one within the local-minimum budget
        X, labels = toy_task()
        cfg = LearnConfig(n_t=2, n_r=2, nonlinearity=NonlinearityConfig(), seed=5)

        def classify_tables(plus, minus):
            conn = Connectome(np.array(plus), np.array(minus), d=4)
            z_p = branch_activations(conn.plus, X.astype(float))
            z_m = branch_activations(conn.minus, X.astype(float))
            b_p = np.asarray(branch_output(z_p, cfg.nonlinearity, cfg.kind))
            b_m = np.asarray(branch_output(z_m, cfg.nonlinearity, cfg.kind))
            return np.asarray(g_heaviside(b_p.sum(1) - b_m.sum(1)))

        zero_exists = False
        lines = list(product(range(4), repeat=4))
        for pl in lines[:64]:
            plus = [[pl[0], pl[1]], [pl[2], pl[3]]]
            if zero_exists:
                break
            for mi in lines:
                minus = [[mi[0], mi[1]], [mi[2], mi[3]]]
                if np.array_equal(classify_tables(plus, minus), labels):
                    zero_exists = True
                    break
        assert zero_exists

        init = random_connectome(4, 2, 2, rngs.stream(5, rngs.INIT_CONNECTOME))
        trace = train(X, labels, init, cfg)
        assert trace.best_mae == 0.0
        assert trace.stop_reason == "memorized"

    def test_zero_budget_returns_initial_evaluation(self):
        X, labels = toy_task()
        cfg = LearnConfig(n_t=2, n_r=2, n_min=0,
                          nonlinearity=NonlinearityConfig(), seed=2)
        init = random_connectome(4, 2, 2, np.random.default_rng(9))
        trace = train(X, labels, init, cfg)
        assert trace.iterations == 0
        assert len(trace.mae_history) == 1
        assert np.array_equal(trace.best_connectome.plus, init.plus)

    def test_determinism(self):
        X, labels, conn, _ = tiny_setup(11, d=8, m=2, k=3, n_patterns=20)
        cfg = LearnConfig(n_t=3, n_r=3, n_min=3, n_ch=10, max_iterations=3000,
                          nonlinearity=NonlinearityConfig(), seed=42)
        t1 = train(X, labels, conn, cfg)
        t2 = train(X, labels, conn, cfg)
        assert t1.mae_history == t2.mae_history
        assert np.array_equal(t1.best_connectome.plus, t2.best_connectome.plus)
        assert np.array_equal(t1.final_connectome.minus, t2.final_connectome.minus)

    def test_resource_conservation(self):
        X, labels, conn, _ = tiny_setup(13, d=10, m=3, k=4, n_patterns=24)
        cfg = LearnConfig(n_t=4, n_r=4, n_min=4, n_ch=10, max_iterations=3000,
                          nonlinearity=NonlinearityConfig(), seed=3)
        trace = train(X, labels, conn, cfg)
        for c in (trace.best_connectome, trace.final_connectome):
            assert c.plus.shape == (3, 4) and c.minus.shape == (3, 4)
            assert c.plus.min() >= 0 and c.plus.max() < 10

    def test_monotone_between_events_and_best_bound(self):
        X, labels, conn, _ = tiny_setup(17, d=10, m=3, k=4, n_patterns=30)
        cfg = LearnConfig(n_t=4, n_r=4, n_min=6, n_ch=10, max_iterations=3000,
                          nonlinearity=NonlinearityConfig(), seed=8)
        trace = train(X, labels, conn, cfg)
        event_iters = {e.iteration for e in trace.local_minima}
        for i in range(1, len(trace.mae_history)):
            if i not in event_iters:
                assert trace.mae_history[i] <= trace.mae_history[i - 1] + 1e-12
        assert trace.best_mae <= min(trace.mae_history)
        assert trace.best_mae <= trace.mae_history[0]

    def test_margin_training_tracks_delta_schedule(self):
        rng = np.random.default_rng(23)
        X = (rng.random((40, 12)) < 0.3).astype(np.uint8)
        labels = rng.integers(0, 2, size=40)
        labels[:2] = [0, 1]
        cfg = LearnConfig(n_t=4, n_r=4, n_min=30, n_ch=10, use_margin=True,
                          delta0=8.0, max_iterations=5000,
                          nonlinearity=NonlinearityConfig(), seed=7)
        init = random_connectome(12, 2, 3, rng)
        trace = train(X, labels, init, cfg)
        deltas = trace.delta_history
        assert deltas[0] == 8.0
        assert all(b <= a for a, b in zip(deltas, deltas[1:]))
        assert not np.isnan(trace.best_mae_binary)
