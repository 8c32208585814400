# -*- coding: utf-8 -*-
"""
Tests for the channel service: droppings, fading draws and ZF precoding.
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
from numpy.testing import assert_allclose, assert_array_equal

from channel_service import (
    draw_small_scale, drop_topology, generate_realization, large_scale_gain, validate_counts, zf_precoder,
)
from exceptions import ConfigError, SingularChannelError
from models import FadingParams, PowerLimits
from rate_service import SU, build_link_system, system_sinrs
from fixtures import small_scenario


class ZeroForcingTestCase(unittest.TestCase):
    def test_nulls_cross_streams(self):
        H = draw_small_scale((3, 8), 11)
        W = zf_precoder(H)
        G = H @ W
        off_diagonal = G - np.diag(np.diag(G))
        assert_allclose(np.abs(off_diagonal), 0.0, atol=1e-12)

    def test_unit_norm_columns(self):
        W = zf_precoder(draw_small_scale((4, 16), 5))
        self.assertEqual(W.shape, (16, 4))
        assert_allclose(np.linalg.norm(W, axis=0), 1.0)

    def test_more_streams_than_antennas(self):
        with self.assertRaises(SingularChannelError):
            zf_precoder(draw_small_scale((5, 4), 1))

    def test_rank_deficient_group(self):
        row = draw_small_scale((1, 8), 2)
        with self.assertRaises(SingularChannelError):
            zf_precoder(np.vstack([row, row]))

    def test_array_gain_grows_with_antennas(self):
        streams = 3
        for M in (16, 32):
            gains = []
            for seed in range(400):
                H = draw_small_scale((streams, M), seed)
                gains.extend(np.abs(np.diag(H @ zf_precoder(H))) ** 2)
            self.assertAlmostEqual(float(np.mean(gains)) / (M - streams + 1), 1.0, delta=0.05)

    def test_single_stream_is_matched_filter(self):
        h = draw_small_scale((1, 8), 9)
        w = zf_precoder(h)[:, 0]
        assert_allclose(np.abs(h[0] @ w) ** 2, np.linalg.norm(h) ** 2)


class FadingTestCase(unittest.TestCase):
    def test_path_loss_without_shadowing(self):
        params = FadingParams(phi=1.0, alpha_pl=3.0)
        assert_allclose(large_scale_gain(10.0, params, 0.0), 1e-3)

    def test_distance_clamped_at_d_min(self):
        params = FadingParams(d_min=1.0)
        assert_allclose(large_scale_gain(0.1, params, 0.0), 1.0)

    def test_shadowing_in_db(self):
        params = FadingParams(shadow_sigma_db=8.0)
        ratio = large_scale_gain(50.0, params, 1.0) / large_scale_gain(50.0, params, 0.0)
        assert_allclose(10.0 * np.log10(ratio), 8.0)

    def test_non_finite_distance(self):
        with self.assertRaises(ConfigError):
            large_scale_gain(np.inf, FadingParams(), 0.0)

    def test_small_scale_statistics(self):
        h = draw_small_scale(200000, 0)
        self.assertAlmostEqual(float(np.mean(np.abs(h) ** 2)), 1.0, delta=0.02)
        self.assertAlmostEqual(float(np.mean(h.real)), 0.0, delta=0.01)

    def test_small_scale_is_seeded(self):
        assert_array_equal(draw_small_scale((2, 3), 4), draw_small_scale((2, 3), 4))
        self.assertFalse(np.allclose(draw_small_scale((2, 3), 4), draw_small_scale((2, 3), 5)))

    def test_empty_dimension(self):
        with self.assertRaises(ConfigError):
            draw_small_scale((0, 3), 1)

    def test_int_dimension_gives_a_vector(self):
        self.assertEqual(draw_small_scale(1, 0).shape, (1,))
        self.assertEqual(draw_small_scale(5, 0).shape, (5,))

    def test_path_loss_distance_scaling(self):
        params = FadingParams()
        d = np.array([10.0, 40.0, 120.0])
        ratio = large_scale_gain(2 * d, params, 0.7) / large_scale_gain(d, params, 0.7)
        assert_allclose(ratio, 2.0 ** -params.alpha_pl)


class TopologyTestCase(unittest.TestCase):
    def test_antenna_budget(self):
        with self.assertRaises(ConfigError):
            validate_counts(8, 4, 4)
        with self.assertRaises(ConfigError):
            validate_counts(8, 0, 2)
        validate_counts(16, 1, 0)

    def test_users_inside_area_and_su_radius(self):
        config = small_scenario(num_sbs=3)
        topology = drop_topology(config, 21)
        self.assertEqual((topology.K, topology.N), (2, 3))
        for points in (topology.sbs_positions, topology.mu_positions, topology.su_positions):
            self.assertTrue(np.all((points >= 0.0) & (points <= config.area_side)))
        distances = np.linalg.norm(topology.su_positions - topology.sbs_positions, axis=1)
        self.assertTrue(np.all(distances <= config.fading.r_su + 1e-9))
        assert_allclose(topology.mbs_position, [250.0, 250.0])

    def test_sbs_centered_on_average(self):
        config = small_scenario(num_sbs=4)
        positions = np.vstack([drop_topology(config, seed).sbs_positions for seed in range(200)])
        assert_allclose(positions.mean(axis=0), [250.0, 250.0], atol=25.0)


class RealizationTestCase(unittest.TestCase):
    def setUp(self):
        self.config = small_scenario()

    def test_same_seed_same_gains(self):
        a = generate_realization(self.config, 42).g_eff
        b = generate_realization(self.config, 42).g_eff
        assert_array_equal(a.a_mu, b.a_mu)
        assert_array_equal(a.c_mbs_su_bh, b.c_mbs_su_bh)

    def test_different_seeds_differ(self):
        a = generate_realization(self.config, 1).g_eff
        b = generate_realization(self.config, 2).g_eff
        self.assertFalse(np.allclose(a.a_mu, b.a_mu))

    def test_gain_shapes(self):
        g = generate_realization(self.config, 3).g_eff
        K, N = 2, 2
        self.assertEqual(g.a_mu.shape, (K,))
        self.assertEqual(g.a_bh.shape, (N,))
        self.assertEqual(g.c_sbs_mu.shape, (N, K))
        self.assertEqual(g.c_mbs_su_mu.shape, (K, N))
        self.assertEqual(g.c_mbs_su_bh.shape, (N, N))
        assert_array_equal(np.diag(g.c_sbs_sbs), 0.0)
        assert_array_equal(np.diag(g.c_sbs_su), 0.0)

    def test_gains_match_precoder(self):
        channel = generate_realization(self.config, 8)
        K, N = channel.K, channel.N
        hw2 = np.abs(channel.h_mbs @ channel.W) ** 2
        assert_allclose(channel.g_eff.a_mu, channel.beta_mu * np.diag(hw2[:K, :K]))
        assert_allclose(channel.g_eff.a_bh, channel.beta_bh * np.diag(hw2[K:K + N, K:K + N]))
        # ZF leaves no MBS leakage between the scheduled receivers
        group = hw2[:K + N]
        assert_allclose(group - np.diag(np.diag(group)), 0.0, atol=1e-20)

    def test_mbs_streams_leak_into_small_cells(self):
        channel = generate_realization(self.config, 5)
        g = channel.g_eff
        self.assertTrue(np.all(g.c_mbs_su_mu > 0))
        self.assertTrue(np.all(g.c_mbs_su_bh > 0))
        system = build_link_system(g, FadingParams(), PowerLimits(r_min_mu=0.0, r_min_su=0.0))
        p = np.full(system.n_vars, 0.1)
        louder = p.copy()
        louder[0] *= 10.0
        su = system.links_of(SU)
        self.assertTrue(np.all(system_sinrs(system, louder)[su] < system_sinrs(system, p)[su]))

    def test_no_sbs(self):
        channel = generate_realization(small_scenario(num_mus=1, num_sbs=0), 4)
        self.assertEqual(channel.N, 0)
        self.assertEqual(channel.W.shape, (16, 1))
        self.assertEqual(channel.g_eff.c_mbs_su_mu.shape, (1, 0))


if __name__ == "__main__":
    unittest.main()
