"""Branch nonlinearities, somatic activation, and the comparator."""

import math

import numpy as np
import pytest

from branchlearn.model import (Connectome, ModelKind, NonlinearityConfig, b, b_leak,
                               branch_activation, classify, decision_values,
                               g_heaviside, g_margin, neuron_activation,
                               random_connectome)


class TestBranchActivation:
    def test_double_contact_counts_twice(self):
        x = np.array([0, 0, 0, 1])
        assert branch_activation(np.array([3, 3]), x) == 2

    def test_all_zero_input(self):
        assert branch_activation(np.array([0, 1]), np.zeros(2)) == 0

    def test_direct_sum(self):
        assert branch_activation(np.array([0, 1, 2]), np.array([1, 0, 1])) == 2


class TestNonlinearity:
    def test_square_over_threshold(self):
        cfg = NonlinearityConfig(exponent=2, x_thr=2.0)
        assert b(2.0, cfg) == 2.0
        assert b(0.0, cfg) == 0.0

    def test_saturation_clamps(self):
        cfg = NonlinearityConfig(exponent=2, x_thr=2.0, b_sat=10.0)
        assert b(10.0, cfg) == 10.0   # raw value would be 50

    def test_leak_gate(self):
        cfg = NonlinearityConfig(exponent=2, x_thr=2.0, z_leak=1.0)
        assert b_leak(1.0, cfg) == 0.0
        assert b_leak(0.5, cfg) == 0.0
        # z_leak = p*k = 0.1*10 = 1; (3-1)^2/2 = 2
        assert b_leak(3.0, cfg) == 2.0

    def test_leak_zero_reduces_to_plain(self):
        cfg = NonlinearityConfig(exponent=2, x_thr=2.0, z_leak=0.0)
        z = np.linspace(0, 20, 64)
        np.testing.assert_allclose(b_leak(z, cfg), b(z, cfg))

    def test_monotone_and_leak_dominated(self):
        cfg = NonlinearityConfig(exponent=2, x_thr=2.0)
        leaky = NonlinearityConfig(exponent=2, x_thr=2.0, z_leak=1.5)
        z = np.linspace(0, 30, 256)
        assert np.all(np.diff(b(z, cfg)) >= 0)
        assert np.all(np.diff(b_leak(z, leaky)) >= 0)
        assert np.all(b_leak(z, leaky) <= b(z, cfg))

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            NonlinearityConfig(exponent=0)
        with pytest.raises(ValueError):
            NonlinearityConfig(x_thr=-1)
        with pytest.raises(ValueError):
            NonlinearityConfig(z_leak=-0.5)


def worked_example_connectome():
    """One dendrite per neuron wired as (2x1 + x2 + x3) vs (2x2 + 2x3)."""
    return Connectome(plus=np.array([[0, 0, 1, 2]]),
                      minus=np.array([[1, 1, 2, 2]]), d=3)


class TestWorkedExample:
    cfg = NonlinearityConfig(exponent=2, x_thr=1.0)

    def test_first_pattern(self):
        conn = worked_example_connectome()
        assert neuron_activation(conn.plus, np.array([1, 0, 0]), self.cfg) == 4.0
        assert neuron_activation(conn.minus, np.array([1, 0, 0]), self.cfg) == 0.0
        assert classify(np.array([1, 0, 0]), conn, self.cfg) == 1

    def test_closed_form_on_second_pattern(self):
        # expanding the squares: 4x1 - 3x2 - 3x3 + 4x1x2 + 4x1x3 - 6x2x3
        # at (0,1,1): -3 - 3 - 6 = -12
        conn = worked_example_connectome()
        h = decision_values(conn, np.array([0, 1, 1]), self.cfg)
        assert h == -12.0
        assert classify(np.array([0, 1, 1]), conn, self.cfg) == 0

    def test_all_zero_input_gives_zero(self):
        conn = worked_example_connectome()
        assert decision_values(conn, np.zeros(3), self.cfg) == 0.0


class TestComparator:
    def test_positive_wins(self):
        assert g_heaviside(4.0) == 1

    def test_tie_goes_to_zero(self):
        assert g_heaviside(0.0) == 0

    def test_swap_symmetry(self):
        rng = np.random.default_rng(7)
        cfg = NonlinearityConfig()
        conn = random_connectome(12, 3, 4, rng)
        flipped = Connectome(conn.minus.copy(), conn.plus.copy(), conn.d)
        for _ in range(50):
            x = (rng.random(12) < 0.3).astype(np.uint8)
            alpha = decision_values(conn, x, cfg)
            if alpha != 0:
                assert classify(x, conn, cfg) == 1 - classify(x, flipped, cfg)


class TestGMargin:
    def test_piecewise_values(self):
        assert g_margin(0.0, 25.0) == 0.5
        assert g_margin(25.0, 25.0) == 1.0
        assert g_margin(-12.5, 25.0) == 0.25

    def test_matches_heaviside_outside_margin(self):
        rng = np.random.default_rng(1)
        alpha = rng.uniform(-100, 100, size=1000)
        outside = np.abs(alpha) >= 25.0
        gm = np.asarray(g_margin(alpha, 25.0))
        gh = np.asarray(g_heaviside(alpha), dtype=float)
        np.testing.assert_allclose(gm[outside], gh[outside])

    def test_odd_symmetry_about_half(self):
        alpha = np.linspace(-30, 30, 121)
        gm = np.asarray(g_margin(alpha, 25.0))
        np.testing.assert_allclose(gm + gm[::-1], 1.0, atol=1e-12)

    def test_requires_positive_delta(self):
        with pytest.raises(ValueError):
            g_margin(1.0, 0.0)


class TestLinearReduction:
    def test_exponent_one_equals_linear(self):
        cfg = NonlinearityConfig(exponent=1, x_thr=1.0)
        rng = np.random.default_rng(3)
        conn = random_connectome(20, 4, 5, rng)
        for _ in range(30):
            x = (rng.random(20) < 0.2).astype(np.uint8)
            a_nl = neuron_activation(conn.plus, x, cfg, ModelKind.NONLINEAR)
            a_l = neuron_activation(conn.plus, x, cfg, ModelKind.LINEAR)
            assert a_nl == a_l


class TestConnectome:
    def test_resource_accounting(self):
        conn = random_connectome(10, 4, 6, np.random.default_rng(0))
        assert conn.s == 24 and conn.m == 4 and conn.k == 6

    def test_index_bounds_checked(self):
        with pytest.raises(ValueError):
            Connectome(plus=np.array([[0, 12]]), minus=np.array([[0, 1]]), d=10)
