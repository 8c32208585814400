# -*- coding: utf-8 -*-
"""
Simulation Service - Monte Carlo sweeps over droppings and scheme comparison
Every (sweep value, dropping) pair is one task; all schemes run on the same realization
"""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace

import numpy as np
from tqdm import tqdm

from baseline_service import GridSpec, bfs_oracle, grid_resolution_slack, run_scheme
from cccp_service import solve_overall
from channel_service import generate_realization
from config import Config
from exceptions import InfeasibleProblemError, NoFeasibleGridPointError, SimulationError
from models import ResultRow, SchemeId, SweepAxis, Termination
from rate_service import build_link_system

logger = logging.getLogger('SIM')

# Normal quantile of the two-sided 95% interval
Z_95 = 1.96
# HD may only beat the proposed scheme by numerical noise at low self-interference
DOMINANCE_GAMMA = 1e-5
DOMINANCE_TOL = 1e-6


@dataclass
class SummaryRow:
    scheme: str
    sweep_param: str
    sweep_value: float
    n: int
    failed: int
    total_se_mean: float
    total_se_ci95: float
    mu_se_mean: float
    su_se_mean: float
    backhaul_power_mean: float
    # droppings where every scheme produced a solution
    paired_n: int = 0
    paired_total_se_mean: float = float('nan')


# ==================== SCENARIO HELPERS ====================

def scenario_for(config, value):
    """Copy of the scenario with the sweep axis set to value"""
    axis = SweepAxis(config.sweep_axis)
    if axis == SweepAxis.NUM_MUS:
        return replace(config, num_mus=int(round(value)))
    if axis == SweepAxis.NUM_SBS:
        return replace(config, num_sbs=int(round(value)))
    if axis == SweepAxis.GAMMA_SI:
        return replace(config, fading=replace(config.fading, gamma_si=float(value)))
    return config


def realization_seed(config, dropping):
    """
    Integer seed of one dropping

    The sweep value is not part of the seed, so a gamma sweep sees the same
    droppings at every point.
    """
    return int(np.random.SeedSequence([int(config.seed), int(dropping)]).generate_state(1)[0])


def _row(scheme, config, value, dropping, report=None, termination=None, record_timing=False):
    axis = SweepAxis(config.sweep_axis).value
    if report is None or report.final_rates is None:
        return ResultRow(
            scheme=SchemeId(scheme).value, sweep_param=axis, sweep_value=float(value), dropping=int(dropping),
            total_se=0.0, mu_se=0.0, su_se=0.0, backhaul_power_w=0.0,
            iterations=0 if report is None else report.inner_iterations,
            termination=(termination or report.termination).value,
            wall_time_ms=report.wall_time * 1000.0 if (record_timing and report is not None) else None,
        )
    rates = report.final_rates
    return ResultRow(
        scheme=SchemeId(scheme).value,
        sweep_param=axis,
        sweep_value=float(value),
        dropping=int(dropping),
        total_se=float(rates.total),
        mu_se=rates.mu_sum,
        su_se=rates.su_sum,
        backhaul_power_w=report.backhaul_power,
        iterations=int(report.inner_iterations),
        termination=report.termination.value,
        wall_time_ms=report.wall_time * 1000.0 if record_timing else None,
    )


# ==================== TASKS ====================

def run_task(config, value, dropping):
    """
    All schemes on one dropping; failures become rows instead of exceptions

    Returns:
        list of ResultRow in config.schemes order
    """
    scenario = scenario_for(config, value)
    try:
        channel = generate_realization(scenario, realization_seed(config, dropping))
    except SimulationError as e:
        logger.warning("Dropping %d at %s: channel generation failed (%s)", dropping, value, e)
        return [_row(s, config, value, dropping, termination=Termination.ERROR) for s in config.schemes]

    rows = []
    for scheme in config.schemes:
        try:
            report = run_scheme(scheme, channel, scenario.solver, scenario.fading)
            rows.append(_row(scheme, config, value, dropping, report, record_timing=config.record_timing))
        except InfeasibleProblemError:
            rows.append(_row(scheme, config, value, dropping, termination=Termination.INFEASIBLE))
        except Exception as e:
            logger.warning("Dropping %d at %s, %s failed: %s", dropping, value, SchemeId(scheme).value, e)
            rows.append(_row(scheme, config, value, dropping, termination=Termination.ERROR))
    return rows


def _task_entry(args):
    return run_task(*args)


def _order_key(config):
    scheme_rank = {SchemeId(s).value: i for i, s in enumerate(config.schemes)}
    value_rank = {float(v): i for i, v in enumerate(config.sweep_values)}
    return lambda row: (scheme_rank[row.scheme], value_rank[row.sweep_value], row.dropping)


def run_sweep(config, workers=None, progress=None):
    """
    Monte Carlo sweep: one row per (scheme, sweep value, dropping)

    Args:
        config: ScenarioConfig
        workers: process count (defaults to config.workers)
        progress: show a tqdm bar (defaults to Config.PROGRESS)

    Returns:
        list of ResultRow ordered by (scheme, sweep value, dropping), independent
        of the worker count
    """
    config.validate()
    workers = config.workers if workers is None else workers
    progress = Config.PROGRESS if progress is None else progress
    tasks = [(config, value, dropping) for value in config.sweep_values for dropping in range(config.droppings)]
    logger.info("Sweep over %s: %d values x %d droppings x %d schemes on %d worker(s)",
                SweepAxis(config.sweep_axis).value, len(config.sweep_values), config.droppings,
                len(config.schemes), workers)

    rows = []
    bar = tqdm(total=len(tasks), desc='droppings', disable=not progress)
    if workers <= 1:
        for task in tasks:
            rows.extend(_task_entry(task))
            bar.update(1)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_task_entry, task) for task in tasks]
            for future in as_completed(futures):
                rows.extend(future.result())
                bar.update(1)
    bar.close()

    rows.sort(key=_order_key(config))
    failed = sum(not row.succeeded for row in rows)
    if failed:
        logger.info("%d of %d rows did not produce a solution", failed, len(rows))
    dominance_violations(rows, config)
    return rows


# ==================== AGGREGATION ====================

def mean_ci(values):
    """Mean and 95% normal-approximation half width (sample std, ddof=1)"""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return float('nan'), float('nan')
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(Z_95 * values.std(ddof=1) / np.sqrt(values.size))


def aggregate(rows, config):
    """
    SummaryRow per (scheme, sweep value) over the rows that produced a solution.
    The paired columns only use droppings on which every scheme succeeded, so
    schemes are compared on the same realizations.
    """
    summary = []
    axis = SweepAxis(config.sweep_axis).value
    schemes = [SchemeId(s).value for s in config.schemes]
    for value in config.sweep_values:
        value = float(value)
        solved = {}
        for r in rows:
            if r.sweep_value == value and r.succeeded:
                solved.setdefault(r.dropping, set()).add(r.scheme)
        common = {d for d, done in solved.items() if done.issuperset(schemes)}
        if len(common) < len(solved):
            logger.debug("%s=%s: %d of %d droppings solved by every scheme", axis, value, len(common), len(solved))
        for scheme in schemes:
            group = [r for r in rows if r.scheme == scheme and r.sweep_value == value]
            ok = [r for r in group if r.succeeded]
            mean, ci = mean_ci([r.total_se for r in ok])
            summary.append(SummaryRow(
                scheme=scheme,
                sweep_param=axis,
                sweep_value=value,
                n=len(ok),
                failed=len(group) - len(ok),
                total_se_mean=mean,
                total_se_ci95=ci,
                mu_se_mean=mean_ci([r.mu_se for r in ok])[0],
                su_se_mean=mean_ci([r.su_se for r in ok])[0],
                backhaul_power_mean=mean_ci([r.backhaul_power_w for r in ok])[0],
                paired_n=len(common),
                paired_total_se_mean=mean_ci([r.total_se for r in ok if r.dropping in common])[0],
            ))
    order = {s: i for i, s in enumerate(schemes)}
    summary.sort(key=lambda s: order[s.scheme])
    return summary


def dominance_violations(rows, config):
    """
    Realizations where HD beats the proposed scheme although self-interference
    is low; each one is logged
    """
    proposed = SchemeId.PROPOSED_FD_MASSIVE_MIMO.value
    hd = SchemeId.HD_MASSIVE_MIMO.value
    by_key = {(r.scheme, r.sweep_value, r.dropping): r for r in rows}
    violations = []
    for (scheme, value, dropping), row in by_key.items():
        if scheme != hd or not row.succeeded:
            continue
        gamma = scenario_for(config, value).fading.gamma_si
        other = by_key.get((proposed, value, dropping))
        if other is None or not other.succeeded or gamma > DOMINANCE_GAMMA:
            continue
        if row.total_se > other.total_se + DOMINANCE_TOL:
            logger.warning("HD above the proposed scheme at %s=%s, dropping %d (%.6f > %.6f)",
                           row.sweep_param, value, dropping, row.total_se, other.total_se)
            violations.append((value, dropping, row.total_se, other.total_se))
    return violations


# ==================== SINGLE RUNS ====================

def random_start(system, rng):
    """Random powers using between 5% and 95% of every budget"""
    p = np.array(system.var_caps, dtype=float) * rng.uniform(0.05, 0.95, size=system.n_vars)
    for idx, cap, _ in system.cap_groups:
        p[idx] = cap * rng.uniform(0.05, 0.95) * rng.dirichlet(np.ones(len(idx)))
    return p


def run_single(config, dropping=0, starts=1):
    """
    Proposed scheme on one dropping, optionally from several starting points

    The first start is the default half-budget split, the others are random.

    Returns:
        (ChannelRealization, list of SolverReport)
    """
    config.validate()
    channel = generate_realization(config, realization_seed(config, dropping))
    system = build_link_system(channel.g_eff, config.fading, config.solver.limits)
    rng = np.random.default_rng([int(config.seed), int(dropping), 7])
    reports = []
    for start in range(starts):
        initial = None if start == 0 else random_start(system, rng)
        report = solve_overall(channel, config.solver, config.fading, initial_powers=initial)
        logger.info("Start %d: %s, objective %s", start, report.termination.value,
                    f"{report.final_rates.total:.6f}" if report.final_rates else '-')
        reports.append(report)
    return channel, reports


def run_oracle(config, instances=20, points=50):
    """
    Brute force against the proposed solver on K=1, N=1 instances

    Returns:
        list of dicts with dropping, cccp, bfs and slack (None where a side
        has no feasible point)
    """
    scenario = replace(config, num_mus=1, num_sbs=1)
    grid = GridSpec(points_per_dim=points)
    results = []
    for dropping in range(instances):
        channel = generate_realization(scenario, realization_seed(scenario, dropping))
        system = build_link_system(channel.g_eff, scenario.fading, scenario.solver.limits)
        report = solve_overall(channel, scenario.solver, scenario.fading)
        cccp = report.final_rates.total if report.final_rates else None
        try:
            _, bfs = bfs_oracle(system, scenario.solver.limits, grid)
        except NoFeasibleGridPointError:
            bfs = None
        slack = grid_resolution_slack(system, grid)
        logger.info("Instance %d: cccp %s, bfs %s, slack %.4f", dropping, cccp, bfs, slack)
        results.append({'dropping': dropping, 'cccp': cccp, 'bfs': bfs, 'slack': slack})
    return results
