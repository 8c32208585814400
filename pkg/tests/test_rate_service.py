# -*- coding: utf-8 -*-
"""
Tests for SINRs, rates and the constraint check.
"""

# xxxxxxxxxx Add the parent folder to the python path. xxxxxxxxxxxxxxxxxxxx
import sys
import os

try:
    parent_dir = os.path.split(os.path.abspath(os.path.dirname(__file__)))[0]
    sys.path.append(parent_dir)
except NameError:  # pragma: no cover
    sys.path.append('../')
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx

import unittest

import numpy as np
from numpy.testing import assert_allclose

from models import FadingParams, PowerLimits, PowerVector, noise_power_watts, sinr_gap_from_ber
from rate_service import (
    build_link_system, check_constraints, objective, rate, sinr_bh, sinr_mu, sinr_su, system_rate_triple,
    system_rates, system_sinrs,
)
from fixtures import NO_FLOORS, small_channel, toy_gains, toy_params


class UnitsTestCase(unittest.TestCase):
    def test_noise_power(self):
        # -174 dBm/Hz over 10 MHz is -104 dBm
        assert_allclose(noise_power_watts(-174.0, 10e6), 10 ** (-13.4))

    def test_sinr_gap(self):
        self.assertAlmostEqual(sinr_gap_from_ber(1e-3), 3.5322, places=4)
        self.assertAlmostEqual(FadingParams(sinr_gap=1.0).omega, 1.0)


class SinrTestCase(unittest.TestCase):
    def setUp(self):
        self.g = toy_gains()
        self.params = toy_params(gamma_si=1e-5)
        self.P = PowerVector(np.array([10.0]), np.array([10.0]), np.array([0.1]))
        self.sigma2 = self.params.noise_power

    def test_mu_formula(self):
        expected = 10.0 * 1e-6 / (0.1 * 1e-8 + self.sigma2)
        assert_allclose(sinr_mu(0, self.P, self.g, self.params), expected)

    def test_backhaul_formula(self):
        expected = 10.0 * 2e-6 / (1e-5 * 0.1 + self.sigma2)
        assert_allclose(sinr_bh(0, self.P, self.g, self.params), expected)

    def test_access_formula(self):
        expected = 0.1 * 1e-5 / (10.0 * 1e-9 + 10.0 * 2e-9 + self.sigma2)
        assert_allclose(sinr_su(0, self.P, self.g, self.params), expected)

    def test_self_interference_lowers_backhaul(self):
        low = sinr_bh(0, self.P, self.g, toy_params(gamma_si=1e-9))
        high = sinr_bh(0, self.P, self.g, toy_params(gamma_si=1e-3))
        self.assertGreater(low, high)

    def test_rate_at_gap(self):
        self.assertAlmostEqual(rate(self.params.omega, self.params), 1.0)
        self.assertEqual(rate(0.0, self.params), 0.0)

    def test_link_system_agrees_with_per_link_formulas(self):
        system = build_link_system(self.g, self.params, PowerLimits())
        sinrs = system_sinrs(system, self.P)
        assert_allclose(sinrs, [sinr_mu(0, self.P, self.g, self.params),
                                sinr_bh(0, self.P, self.g, self.params),
                                sinr_su(0, self.P, self.g, self.params)])
        triple = objective(self.P, self.g, self.params)
        self.assertAlmostEqual(triple.total, triple.mu_sum + triple.su_sum)
        assert_allclose(system_rates(system, self.P), np.concatenate([triple.r_mu, triple.r_bh, triple.r_su]))


class LinkSystemTestCase(unittest.TestCase):
    def setUp(self):
        self.channel = small_channel()
        self.params = FadingParams()
        self.system = build_link_system(self.channel.g_eff, self.params, PowerLimits())

    def test_layout(self):
        self.assertEqual(self.system.layout, (2, 2, 2))
        self.assertEqual(self.system.couplings, [(2, 4), (3, 5)])
        self.assertEqual([label for _, _, label in self.system.cap_groups], ['c2', 'c3', 'c3'])

    def test_batched_sinrs(self):
        rng = np.random.default_rng(0)
        P = rng.uniform(0.01, 1.0, size=(5, self.system.n_vars))
        batched = system_sinrs(self.system, P)
        for row, p in zip(batched, P):
            assert_allclose(row, system_sinrs(self.system, p))

    def test_half_duplex_weights(self):
        hd = build_link_system(self.channel.g_eff, self.params, PowerLimits(), gamma_si=0.0, su_weight=0.5)
        assert_allclose(hd.weight, [1, 1, 0, 0, 0.5, 0.5])
        assert_allclose(np.diag(hd.interference[2:4, 4:6]), 0.0)
        p = np.full(6, 0.05)
        triple = system_rate_triple(hd, p)
        assert_allclose(triple.r_su, 0.5 * system_rates(hd, p)[4:6])


class ConstraintTestCase(unittest.TestCase):
    def setUp(self):
        self.g = toy_gains()
        self.params = toy_params()

    def test_feasible_point(self):
        P = PowerVector(np.array([10.0]), np.array([10.0]), np.array([1e-6]))
        report = check_constraints(P, self.g, self.params, NO_FLOORS)
        self.assertTrue(report.feasible)
        self.assertEqual(report.max_violation, 0.0)
        self.assertGreater(report.c1[0], 0.0)

    def test_budget_violation(self):
        limits = PowerLimits(p_mbs_max_w=10.0, r_min_mu=0.0, r_min_su=0.0)
        P = PowerVector(np.array([8.0]), np.array([8.0]), np.array([1e-6]))
        report = check_constraints(P, self.g, self.params, limits)
        self.assertFalse(report.feasible)
        assert_allclose(report.c2, -6.0)
        assert_allclose(report.max_violation, 6.0)

    def test_capacity_violation(self):
        P = PowerVector(np.array([10.0]), np.array([1e-9]), np.array([0.1]))
        report = check_constraints(P, self.g, self.params, NO_FLOORS)
        self.assertLess(report.c1[0], 0.0)
        self.assertFalse(report.feasible)

    def test_qos_floor(self):
        limits = PowerLimits(r_min_mu=50.0, r_min_su=0.0)
        P = PowerVector(np.array([10.0]), np.array([10.0]), np.array([1e-6]))
        report = check_constraints(P, self.g, self.params, limits)
        self.assertLess(report.c4[0], 0.0)
        self.assertFalse(report.feasible)


if __name__ == "__main__":
    unittest.main()
