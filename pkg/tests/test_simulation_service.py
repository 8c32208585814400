# -*- coding: utf-8 -*-
"""
Tests for the Monte Carlo harness: seeding, row accounting and aggregation.
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

import math
import unittest
from dataclasses import replace

from models import PowerLimits, ResultRow, SchemeId, SolverConfig, SweepAxis, Termination
from simulation_service import (
    aggregate, dominance_violations, mean_ci, realization_seed, run_sweep, run_task, scenario_for,
)
from fixtures import FAST_SOLVER, small_scenario


def make_row(scheme, value, dropping, total, termination='Converged', axis='gamma_si'):
    return ResultRow(scheme=scheme, sweep_param=axis, sweep_value=value, dropping=dropping, total_se=total,
                     mu_se=total / 2, su_se=total / 2, backhaul_power_w=1.0, iterations=3, termination=termination)


class SeedTestCase(unittest.TestCase):
    def test_one_seed_per_dropping(self):
        config = small_scenario()
        self.assertEqual(realization_seed(config, 3), realization_seed(config, 3))
        self.assertNotEqual(realization_seed(config, 3), realization_seed(config, 4))
        self.assertNotEqual(realization_seed(config, 3), realization_seed(replace(config, seed=8), 3))

    def test_sweep_value_does_not_change_the_dropping(self):
        config = small_scenario(sweep_axis=SweepAxis.GAMMA_SI, sweep_values=[1e-6, 1e-2])
        low, high = (scenario_for(config, v) for v in config.sweep_values)
        self.assertEqual(low.fading.gamma_si, 1e-6)
        self.assertEqual(high.fading.gamma_si, 1e-2)
        self.assertEqual(realization_seed(low, 0), realization_seed(high, 0))

    def test_scenario_for_counts(self):
        config = small_scenario(sweep_axis=SweepAxis.NUM_MUS)
        self.assertEqual(scenario_for(config, 3.0).num_mus, 3)
        config = small_scenario(sweep_axis=SweepAxis.NUM_SBS)
        self.assertEqual(scenario_for(config, 1.0).num_sbs, 1)


class SweepTestCase(unittest.TestCase):
    def test_single_dropping_single_scheme(self):
        config = small_scenario(droppings=1, schemes=[SchemeId.FD_NO_MASSIVE_MIMO])
        rows = run_sweep(config, progress=False)
        self.assertEqual(len(rows), 1)
        row = rows[0]
        self.assertEqual((row.scheme, row.sweep_param, row.dropping), ('fd_no_mmimo', 'none', 0))
        self.assertTrue(row.succeeded)
        self.assertIsNone(row.wall_time_ms)
        self.assertAlmostEqual(row.total_se, row.mu_se + row.su_se)

    def test_row_accounting_and_order(self):
        config = small_scenario(sweep_axis=SweepAxis.NUM_MUS, sweep_values=[1.0, 2.0], droppings=2)
        rows = run_sweep(config, progress=False)
        self.assertEqual(len(rows), 2 * 2 * 2)
        keys = [(r.scheme, r.sweep_value, r.dropping) for r in rows]
        self.assertEqual(keys, [(s, v, d) for s in ('fd_no_mmimo', 'wired_no_mmimo')
                                for v in (1.0, 2.0) for d in (0, 1)])

    def test_independent_of_worker_count(self):
        config = small_scenario(droppings=3)
        serial = run_sweep(config, workers=1, progress=False)
        parallel = run_sweep(config, workers=2, progress=False)
        self.assertEqual(serial, parallel)

    def test_timing_only_when_requested(self):
        config = small_scenario(droppings=1, schemes=[SchemeId.WIRED_NO_MASSIVE_MIMO], record_timing=True)
        rows = run_task(config, 0.0, 0)
        self.assertIsNotNone(rows[0].wall_time_ms)
        self.assertGreaterEqual(rows[0].wall_time_ms, 0.0)

    def test_infeasible_instances_become_rows(self):
        solver = replace(FAST_SOLVER, limits=PowerLimits(r_min_mu=100.0, r_min_su=0.0))
        config = small_scenario(num_mus=1, num_sbs=1, droppings=1, solver=solver,
                                schemes=[SchemeId.PROPOSED_FD_MASSIVE_MIMO, SchemeId.FD_NO_MASSIVE_MIMO])
        rows = run_sweep(config, progress=False)
        self.assertEqual(len(rows), 2)
        for row in rows:
            self.assertEqual(row.termination, Termination.INFEASIBLE.value)
            self.assertEqual(row.total_se, 0.0)
            self.assertFalse(row.succeeded)
        summary = aggregate(rows, config)
        self.assertEqual((summary[0].n, summary[0].failed), (0, 1))
        self.assertTrue(math.isnan(summary[0].total_se_mean))
        self.assertEqual(summary[1].paired_n, 0)

    def test_stalled_rows_count_as_solved(self):
        row = make_row('hd_mmimo', 0.0, 0, 4.0, termination=Termination.STALLED.value)
        self.assertTrue(row.succeeded)


class AggregateTestCase(unittest.TestCase):
    def test_mean_ci(self):
        mean, ci = mean_ci([1.0, 2.0, 3.0])
        self.assertAlmostEqual(mean, 2.0)
        self.assertAlmostEqual(ci, 1.96 / math.sqrt(3.0))
        self.assertEqual(mean_ci([4.0]), (4.0, 0.0))
        self.assertTrue(all(math.isnan(v) for v in mean_ci([])))

    def test_failed_rows_left_out(self):
        config = small_scenario(schemes=[SchemeId.HD_MASSIVE_MIMO])
        rows = [make_row('hd_mmimo', 0.0, 0, 4.0, axis='none'),
                make_row('hd_mmimo', 0.0, 1, 6.0, axis='none'),
                make_row('hd_mmimo', 0.0, 2, 0.0, termination='Error', axis='none')]
        summary = aggregate(rows, config)
        self.assertEqual(len(summary), 1)
        self.assertEqual((summary[0].n, summary[0].failed), (2, 1))
        self.assertAlmostEqual(summary[0].total_se_mean, 5.0)
        self.assertAlmostEqual(summary[0].mu_se_mean, 2.5)

    def test_paired_means_use_common_droppings(self):
        config = small_scenario(schemes=[SchemeId.PROPOSED_FD_MASSIVE_MIMO, SchemeId.FD_NO_MASSIVE_MIMO])
        rows = [make_row('proposed_fd_mmimo', 0.0, 0, 8.0, axis='none'),
                make_row('proposed_fd_mmimo', 0.0, 1, 2.0, axis='none'),
                make_row('fd_no_mmimo', 0.0, 0, 3.0, axis='none'),
                make_row('fd_no_mmimo', 0.0, 1, 0.0, termination='Infeasible', axis='none')]
        proposed, fd = aggregate(rows, config)
        self.assertEqual((proposed.scheme, fd.scheme), ('proposed_fd_mmimo', 'fd_no_mmimo'))
        self.assertAlmostEqual(proposed.total_se_mean, 5.0)
        self.assertEqual((proposed.paired_n, fd.paired_n), (1, 1))
        self.assertAlmostEqual(proposed.paired_total_se_mean, 8.0)
        self.assertAlmostEqual(fd.paired_total_se_mean, 3.0)

    def test_dominance_check(self):
        config = small_scenario(sweep_axis=SweepAxis.GAMMA_SI, sweep_values=[0.0, 0.1])
        rows = [make_row('proposed_fd_mmimo', 0.0, 0, 4.0), make_row('hd_mmimo', 0.0, 0, 5.0),
                make_row('proposed_fd_mmimo', 0.1, 0, 4.0), make_row('hd_mmimo', 0.1, 0, 5.0)]
        with self.assertLogs('SIM', level='WARNING'):
            violations = dominance_violations(rows, config)
        self.assertEqual(violations, [(0.0, 0, 5.0, 4.0)])


@unittest.skipUnless(os.environ.get('SIM_LONG_TESTS'), 'set SIM_LONG_TESTS=1 to run')
class SchemeOrderingTestCase(unittest.TestCase):
    SCHEMES = [SchemeId.PROPOSED_FD_MASSIVE_MIMO, SchemeId.HD_MASSIVE_MIMO, SchemeId.FD_NO_MASSIVE_MIMO]
    # low floors keep most droppings feasible for every scheme
    SOLVER = SolverConfig(limits=PowerLimits(r_min_mu=0.1, r_min_su=0.05))

    def test_proposed_above_hd_above_fd_no(self):
        config = small_scenario(num_antennas=64, num_mus=4, num_sbs=4, droppings=10, solver=self.SOLVER,
                                schemes=self.SCHEMES)
        summary = {s.scheme: s for s in aggregate(run_sweep(config, progress=False), config)}
        self.assertGreaterEqual(summary['proposed_fd_mmimo'].paired_n, 3)
        proposed = summary['proposed_fd_mmimo'].paired_total_se_mean
        hd = summary['hd_mmimo'].paired_total_se_mean
        fd_no = summary['fd_no_mmimo'].paired_total_se_mean
        self.assertGreaterEqual(proposed, hd * (1.0 - 1e-3))
        self.assertGreater(hd, fd_no)

    def test_proposed_does_not_grow_with_self_interference(self):
        config = small_scenario(num_antennas=64, num_mus=4, num_sbs=4, droppings=5, solver=self.SOLVER,
                                schemes=[SchemeId.PROPOSED_FD_MASSIVE_MIMO],
                                sweep_axis=SweepAxis.GAMMA_SI, sweep_values=[1e-9, 1e-7, 1e-5, 1e-3])
        rows = run_sweep(config, progress=False)
        solved = {}
        for row in rows:
            if row.succeeded:
                solved.setdefault(row.dropping, {})[row.sweep_value] = row.total_se
        common = [d for d, by_value in solved.items() if len(by_value) == len(config.sweep_values)]
        self.assertTrue(common)
        means = [sum(solved[d][v] for d in common) / len(common) for v in config.sweep_values]
        for lower, higher in zip(means, means[1:]):
            self.assertLessEqual(higher, lower * (1.0 + 1e-6) + 1e-9)

    def test_proposed_converges_on_most_droppings(self):
        config = small_scenario(num_antennas=64, num_mus=4, num_sbs=4, droppings=20, solver=self.SOLVER,
                                schemes=[SchemeId.PROPOSED_FD_MASSIVE_MIMO])
        rows = [r for r in run_sweep(config, progress=False) if r.termination != Termination.INFEASIBLE.value]
        self.assertTrue(rows)
        converged = sum(r.termination == Termination.CONVERGED.value for r in rows)
        self.assertGreaterEqual(converged, 0.95 * len(rows))


if __name__ == "__main__":
    unittest.main()
