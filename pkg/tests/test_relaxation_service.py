# -*- coding: utf-8 -*-
"""
Tests for the rate lower bound, its retightening and the concave forms built on it.
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

from baseline_service import wired_link_system
from exceptions import ConfigError
from models import FadingParams, LogPowerVector, PowerLimits
from rate_service import build_link_system, system_objective, system_rates, system_sinrs
from relaxation_service import (
    cap_forms, dc_constraint, floor_forms, gradients, initial_relaxation, log2_sinr_form, relaxed_objective,
    relaxed_rate_bh, relaxed_rate_form, relaxed_rate_mu, relaxed_rate_su, retighten, scam_constants,
)
from fixtures import small_channel


class BoundTestCase(unittest.TestCase):
    def test_tight_at_anchor(self):
        for z0 in (1e-6, 0.3, 1.0, 17.0, 1e6):
            alpha, mu = scam_constants(z0)
            self.assertAlmostEqual(alpha * np.log2(z0) + mu, np.log2(1.0 + z0), places=10)

    def test_lower_bound_everywhere(self):
        z = np.logspace(-4, 6, 400)
        for z0 in (0.05, 2.0, 300.0):
            alpha, mu = scam_constants(z0)
            self.assertTrue(np.all(alpha * np.log2(z) + mu <= np.log2(1.0 + z) + 1e-12))

    def test_lower_bound_at_random_pairs(self):
        rng = np.random.default_rng(8)
        z = 10.0 ** rng.uniform(-6, 6, size=1000)
        z0 = 10.0 ** rng.uniform(-6, 6, size=1000)
        alpha, mu = scam_constants(z0)
        self.assertTrue(np.all(alpha * np.log2(z) + mu <= np.log2(1.0 + z) + 1e-9))

    def test_alpha_range(self):
        alpha, _ = scam_constants(np.array([1e-3, 1.0, 1e3]))
        self.assertTrue(np.all((alpha > 0) & (alpha < 1)))
        assert_allclose(alpha[1], 0.5)

    def test_non_positive_anchor(self):
        with self.assertRaises(ConfigError):
            scam_constants(0.0)
        with self.assertRaises(ConfigError):
            scam_constants(np.array([1.0, np.nan]))


class RelaxedRateTestCase(unittest.TestCase):
    def setUp(self):
        self.channel = small_channel(seed=12)
        self.params = FadingParams()
        self.system = build_link_system(self.channel.g_eff, self.params, PowerLimits())
        rng = np.random.default_rng(1)
        self.p = rng.uniform(0.05, 2.0, size=self.system.n_vars)
        self.p[4:] = rng.uniform(1e-3, 0.05, size=2)
        self.relax = initial_relaxation(self.system, self.p)

    def test_equal_to_true_rate_at_anchor(self):
        x = np.log(self.p)
        rates = system_rates(self.system, self.p)
        relaxed = [relaxed_rate_form(self.system, self.relax, link).value(x) for link in range(self.system.n_links)]
        assert_allclose(relaxed, rates, rtol=1e-10, atol=1e-10)

    def test_per_link_helpers(self):
        g, params = self.channel.g_eff, self.params
        x = LogPowerVector(np.log(self.p), self.system.layout)
        rates = system_rates(self.system, self.p)
        values = [relaxed_rate_mu(0, x, g, params, self.relax), relaxed_rate_mu(1, x, g, params, self.relax),
                  relaxed_rate_bh(0, x, g, params, self.relax), relaxed_rate_bh(1, x, g, params, self.relax),
                  relaxed_rate_su(0, x, g, params, self.relax), relaxed_rate_su(1, x, g, params, self.relax)]
        assert_allclose(values, rates, rtol=1e-10, atol=1e-10)

    def test_below_true_rate_elsewhere(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            q = self.p * np.exp(rng.normal(scale=1.5, size=self.p.size))
            x = np.log(q)
            rates = system_rates(self.system, q)
            for link in range(self.system.n_links):
                self.assertLessEqual(relaxed_rate_form(self.system, self.relax, link).value(x), rates[link] + 1e-9)

    def test_relaxed_objective_below_true_objective(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            q = self.p * np.exp(rng.uniform(-4.0, 4.0, size=self.p.size))
            x = np.log(q)
            relaxed = relaxed_objective(x, self.channel.g_eff, self.params, self.relax)
            self.assertLessEqual(relaxed, system_objective(self.system, q) + 1e-9)

    def test_retighten_moves_the_anchor(self):
        q = self.p * 1.7
        relax = retighten(self.relax, system_sinrs(self.system, q), self.system.omega)
        x = np.log(q)
        relaxed = [relaxed_rate_form(self.system, relax, link).value(x) for link in range(self.system.n_links)]
        assert_allclose(relaxed, system_rates(self.system, q), rtol=1e-10, atol=1e-10)

    def test_retighten_size_mismatch(self):
        with self.assertRaises(ConfigError):
            retighten(self.relax, np.ones(3), self.system.omega)

    def test_gradients_match_central_differences(self):
        g, params = self.channel.g_eff, self.params
        x = np.log(self.p) + 0.3
        analytic = gradients(LogPowerVector(x, self.system.layout), g, params, self.relax)['objective']
        h = 1e-6
        numeric = np.zeros_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = h
            numeric[i] = (relaxed_objective(x + e, g, params, self.relax)
                          - relaxed_objective(x - e, g, params, self.relax)) / (2 * h)
        assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-6)

    def test_per_link_gradients(self):
        grads = gradients(np.log(self.p), self.channel.g_eff, self.params, self.relax)
        self.assertEqual(grads['mu'].shape, (2, 6))
        self.assertEqual(grads['bh'].shape, (2, 6))
        # the MU rate only grows with its own power
        self.assertGreater(grads['mu'][0, 0], 0.0)
        self.assertEqual(grads['mu'][0, 1], 0.0)
        self.assertLessEqual(grads['mu'][0, 4], 0.0)

    def test_capacity_pair_at_anchor(self):
        concave_b, concave_s = dc_constraint(0, np.log(self.p), self.channel.g_eff, self.params, self.relax)
        rates = system_rates(self.system, self.p)
        assert_allclose([concave_b, concave_s], [rates[2], rates[4]], rtol=1e-10, atol=1e-10)


class ConstraintFormTestCase(unittest.TestCase):
    def setUp(self):
        self.channel = small_channel(seed=5)
        self.params = FadingParams()

    def test_floor_sign_matches_rate(self):
        limits = PowerLimits(r_min_mu=3.0, r_min_su=1.0)
        system = build_link_system(self.channel.g_eff, self.params, limits)
        forms = floor_forms(system)
        self.assertEqual(len(forms), 4)
        floored = np.flatnonzero(system.floor > 0)
        rng = np.random.default_rng(3)
        for _ in range(30):
            p = np.exp(rng.uniform(np.log(1e-8), np.log(5.0), size=system.n_vars))
            excess = system_rates(system, p)[floored] - system.floor[floored]
            values = np.array([form.value(np.log(p)) for form in forms])
            self.assertTrue(np.all(np.sign(values[np.abs(excess) > 1e-9]) == np.sign(excess[np.abs(excess) > 1e-9])))

    def test_zero_floors_are_dropped(self):
        system = build_link_system(self.channel.g_eff, self.params, PowerLimits(r_min_mu=0.0, r_min_su=0.0))
        self.assertEqual(floor_forms(system), [])

    def test_cap_forms(self):
        limits = PowerLimits()
        system = build_link_system(self.channel.g_eff, self.params, limits)
        p = np.array([1.0, 2.0, 3.0, 4.0, 0.01, 0.02])
        values = [form.value(np.log(p)) for form in cap_forms(system)]
        assert_allclose(values, [1.0 - 10.0 / limits.p_mbs_max_w,
                                 1.0 - 0.01 / limits.p_sbs_max_w,
                                 1.0 - 0.02 / limits.p_sbs_max_w])

    def test_fixed_power_links(self):
        system = wired_link_system(self.channel, self.params, PowerLimits())
        p = np.array([0.03, 0.07])
        sinrs = system_sinrs(system, p)
        for link in range(system.n_links):
            assert_allclose(log2_sinr_form(system, link).value(np.log(p)), np.log2(sinrs[link]), rtol=1e-10, atol=1e-9)


if __name__ == "__main__":
    unittest.main()
