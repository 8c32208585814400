# -*- coding: utf-8 -*-
"""
CCCP Service - Outer relaxation loop, inner concave-convex procedure and phase-I
Works on any LinkSystem; solve_overall is the entry point of the proposed scheme
"""

import logging
import time

import numpy as np
from scipy.optimize import brentq

import convex_engine
from convex_engine import ConvexSubproblem
from exceptions import InfeasibleProblemError, InfeasibleStartError
from models import (
    LogPowerVector, PowerLimits, PowerVector, SolverReport, Termination, TracePoint,
)
from rate_service import (
    build_link_system, check_system_constraints, system_objective, system_rate_triple, system_rates, system_sinrs,
)
from relaxation_service import (
    box_bounds, cap_forms, dc_pair, exact_dc_pair, floor_forms, initial_relaxation,
    relaxed_objective_form, relaxed_rate_form, retighten,
)

logger = logging.getLogger('CCCP')

# Regression beyond this counts as a failed step
REGRESSION_TOL = 1e-8
# Share of each power budget used by the default starting point
START_BUDGET_SHARE = 0.5
# Distance kept from the box edges when a start point is pulled inside
BOX_INSET = 1e-6
# Gauss-Seidel sweeps of the backhaul balancing
BALANCE_SWEEPS = 30
# Bracket step in ln(watts) and the lowest backhaul power tried
BRACKET_STEP = 2.0
LOG_POWER_FLOOR = np.log(1e-300)


def taylor_linearize_su(n, anchor, g, params, relax):
    """
    Affine majorant of the relaxed access rate of SBS n at the anchor log powers;
    replacing the access rate with it strengthens the capacity coupling
    """
    system = build_link_system(g, params, PowerLimits())
    x0 = anchor.values if isinstance(anchor, LogPowerVector) else np.asarray(anchor, dtype=float)
    _, su = system.couplings[n]
    return relaxed_rate_form(system, relax, su).linearize(x0)


# ==================== SUBPROBLEMS ====================

def build_subproblem(system, relax, anchor, cfg):
    """
    Convex subproblem of one CCCP step at anchor

    The capacity coupling enters twice: in relaxed form and in exact
    log-SINR form, each with its access-side term replaced by the tangent at
    anchor. Both tangents over-estimate, so every accepted point keeps the
    true backhaul rate at or above the true access rate.
    """
    linearized = []
    for coupling in system.couplings:
        concave_b, concave_s = dc_pair(system, relax, coupling)
        linearized.append(concave_b - concave_s.linearize(anchor))
        exact_b, exact_s = exact_dc_pair(system, coupling)
        linearized.append(exact_b - exact_s.linearize(anchor))
    lower, upper = box_bounds(system, cfg.p_floor)
    return ConvexSubproblem(
        objective=relaxed_objective_form(system, relax),
        linearized_c1=linearized,
        power_caps=cap_forms(system),
        rate_floors=floor_forms(system),
        lower=lower,
        upper=upper,
    )


def relaxed_c1_values(system, relax, x):
    """R_bar^b_n - R_bar^s_n for every SBS at log powers x"""
    values = []
    for coupling in system.couplings:
        concave_b, concave_s = dc_pair(system, relax, coupling)
        values.append(concave_b.value(x) - concave_s.value(x))
    return np.array(values)


def default_start(system):
    """Half of every power budget split evenly over the variables it covers"""
    p = np.array(system.var_caps, dtype=float) * START_BUDGET_SHARE
    for idx, cap, _ in system.cap_groups:
        p[idx] = START_BUDGET_SHARE * cap / len(idx)
    return p


def project_start(system, x, cfg):
    """Pull a log-power point strictly inside the box and every power budget"""
    lower, upper = box_bounds(system, cfg.p_floor)
    x = np.clip(np.asarray(x, dtype=float), lower + BOX_INSET, upper - BOX_INSET)
    p = np.exp(x)
    for idx, cap, _ in system.cap_groups:
        used = p[idx].sum()
        if used >= cap * (1.0 - BOX_INSET):
            p[idx] *= START_BUDGET_SHARE * cap / used
    return np.clip(np.log(p), lower + BOX_INSET, upper - BOX_INSET)


def _trace_point(system, relax, x, phase, outer, inner):
    p = np.exp(x)
    relaxed = relaxed_objective_form(system, relax).value(x)
    report = check_system_constraints(system, p)
    return TracePoint(phase, outer, inner, float(relaxed), system_objective(system, p), report.max_violation)


# ==================== PHASE-I ====================

def find_feasible_start(arbitrary_start, relax, system, cfg, trace=None, outer=0):
    """
    Drive an arbitrary point into the strict interior of the relaxed problem

    Each round re-anchors the relaxation at the current point, linearizes the
    access-side terms there and maximizes a common slack on the coupling and
    QoS constraints. A bound anchored at a far-away point is stricter than
    the original constraints and can shut out feasible instances.

    Returns:
        (log powers strictly feasible for the next CCCP run, phase-I rounds,
        RelaxationState anchored at those log powers)

    Raises:
        InfeasibleProblemError: the slack stalls below the margin or the
            round budget runs out
    """
    x = project_start(system, arbitrary_start, cfg)
    previous = -np.inf
    slack = -np.inf
    for rounds in range(1, cfg.t3_max + 1):
        relax = retighten(relax, system_sinrs(system, np.exp(x)), system.omega, cfg.z0_floor)
        problem = build_subproblem(system, relax, x, cfg)
        report, slack = convex_engine.solve_feasibility(problem, x, cfg.tol, cfg.feasibility_margin)
        x = report.solution
        if trace is not None:
            trace.append(_trace_point(system, relax, x, 'phase1', outer, rounds))
        logger.debug("Phase-I round %d: slack %.6g", rounds, slack)

        if slack >= cfg.feasibility_margin:
            if check_system_constraints(system, np.exp(x), cfg.tol.eps_feas).feasible:
                relax = retighten(relax, system_sinrs(system, np.exp(x)), system.omega, cfg.z0_floor)
                return x, rounds, relax
            logger.warning("Phase-I point passed the slack test but not the constraint check")
        if abs(slack - previous) <= cfg.eps3:
            raise InfeasibleProblemError(f"phase-I slack stalled at {slack:.6g}", slack=slack, rounds=rounds)
        previous = slack

    raise InfeasibleProblemError(f"phase-I round budget exhausted, slack {slack:.6g}",
                                 slack=slack, rounds=cfg.t3_max)


# ==================== CCCP ====================

def cccp_inner(start, relax, system, cfg, trace=None, outer=0):
    """
    Concave-convex procedure for one fixed relaxation

    Args:
        start: log powers feasible for the relaxed problem
        relax: RelaxationState
        system: LinkSystem
        cfg: SolverConfig
        trace: optional list collecting TracePoints
        outer: outer iteration number recorded in the trace

    Returns:
        (log powers, relaxed objective values per iteration, converged flag)

    Raises:
        InfeasibleStartError: start violates the relaxed constraints
    """
    x = np.asarray(start, dtype=float)
    first = build_subproblem(system, relax, x, cfg)
    violation = first.max_violation(x)
    if violation > cfg.tol.eps_feas:
        raise InfeasibleStartError(f"CCCP start violates the relaxed constraints by {violation:.3g}")

    objective = relaxed_objective_form(system, relax)
    value = objective.value(x)
    values = [value]
    converged = False

    for step in range(1, cfg.t2_max + 1):
        problem = first if step == 1 else build_subproblem(system, relax, x, cfg)
        report = convex_engine.solve(problem, x, cfg.tol)
        new_value = objective.value(report.solution)
        if new_value < value - REGRESSION_TOL:
            logger.warning("CCCP step %d lowered the relaxed objective (%.9g -> %.9g), keeping the incumbent",
                           step, value, new_value)
            break

        x = report.solution
        values.append(new_value)
        if trace is not None:
            trace.append(_trace_point(system, relax, x, 'inner', outer, step))
        if abs(new_value - value) <= cfg.eps2:
            converged = True
            break
        value = new_value

    activity = np.abs(relaxed_c1_values(system, relax, x))
    if converged and activity.size and activity.max() > cfg.eps_active:
        logger.debug("Capacity coupling inactive at inner convergence (max gap %.3g)", activity.max())
    return x, values, converged


# ==================== BACKHAUL BALANCING ====================

def coupling_gaps(system, p):
    """R^b_n - R^s_n for every SBS at powers p"""
    rates = system_rates(system, p)
    return np.array([rates[b] - rates[s] for b, s in system.couplings])


def _group_headroom(system, p, i):
    return min((cap - p[idx].sum() for idx, cap, _ in system.cap_groups if i in idx), default=np.inf)


def _balanced_power(system, p, i, b, s):
    """Backhaul power p_i at which R^b equals R^s, the other powers held fixed"""
    def gap(t):
        q = p.copy()
        q[i] = np.exp(t)
        rates = system_rates(system, q)
        return rates[b] - rates[s]

    t0 = np.log(p[i])
    if gap(t0) >= 0:
        hi, lo = t0, max(t0 - BRACKET_STEP, LOG_POWER_FLOOR)
        while gap(lo) >= 0:
            if lo <= LOG_POWER_FLOOR:
                return np.exp(LOG_POWER_FLOOR)
            hi, lo = lo, max(lo - BRACKET_STEP, LOG_POWER_FLOOR)
    else:
        headroom = _group_headroom(system, p, i)
        if not np.isfinite(headroom) or headroom <= 0:
            return p[i]
        lo, hi = t0, np.log(p[i] + headroom)
        if gap(hi) < 0:
            return p[i]
    # the upper end keeps R^b >= R^s
    root = brentq(gap, lo, hi, xtol=1e-13)
    return np.exp(root) if gap(root) >= 0 else np.exp(hi)


def balance_backhaul(system, p, cfg):
    """
    Bring every backhaul rate down to the access rate it carries

    Backhaul links have no objective weight and their power only shows up
    as interference at the SUs. Gauss-Seidel sweeps set each backhaul power
    to the root of R^b_n = R^s_n with the others held fixed; lowering one
    backhaul lifts the other access rates, so later sweeps raise powers
    again where a gap went negative. The balanced point is dropped if it
    breaks a constraint or lowers the objective.

    Returns:
        powers with |R^b_n - R^s_n| <= eps_active wherever reachable
    """
    p = np.asarray(p, dtype=float).copy()
    movable = [(int(system.power_index[b]), b, s) for b, s in system.couplings
               if system.power_index[b] >= 0 and system.weight[b] == 0]
    if not movable:
        return p
    trial = p.copy()
    for sweep in range(1, BALANCE_SWEEPS + 1):
        gaps = coupling_gaps(system, trial)
        if np.abs(gaps).max() <= cfg.eps_active / 2.0 and gaps.min() >= -cfg.tol.eps_feas:
            break
        for i, b, s in movable:
            trial[i] = _balanced_power(system, trial, i, b, s)
    logger.debug("Backhaul balancing stopped after %d sweeps", sweep)
    if not check_system_constraints(system, trial, cfg.tol.eps_feas).feasible:
        logger.debug("Balanced backhaul powers break a constraint, keeping the solver point")
        return p
    if system_objective(system, trial) < system_objective(system, p) - REGRESSION_TOL:
        logger.debug("Balanced backhaul powers lower the objective, keeping the solver point")
        return p
    return trial


# ==================== OUTER LOOP ====================

def _empty_powers(system):
    return PowerVector.from_array(np.zeros(system.n_vars), system.layout)


def _no_variable_report(system, started):
    p = np.zeros(0)
    report = check_system_constraints(system, p)
    termination = Termination.CONVERGED if report.feasible else Termination.INFEASIBLE
    return SolverReport(
        final_powers=_empty_powers(system),
        final_rates=system_rate_triple(system, p),
        objective_trace=[TracePoint('outer', 0, 0, system_objective(system, p),
                                    system_objective(system, p), report.max_violation)],
        c1_activity=np.zeros(0),
        termination=termination,
        wall_time=time.perf_counter() - started,
    )


def solve_system(system, cfg, initial_powers=None):
    """
    Alternate CCCP runs with relaxation retightening until the relaxed
    objective settles

    Args:
        system: LinkSystem of the scheme
        cfg: SolverConfig
        initial_powers: optional PowerVector or array used as the start

    Returns:
        SolverReport; infeasible instances come back with termination
        Infeasible and no powers
    """
    started = time.perf_counter()
    cfg.validate()
    if system.n_vars == 0:
        return _no_variable_report(system, started)

    if initial_powers is None:
        initial_powers = PowerVector.from_array(default_start(system), system.layout)
    elif not isinstance(initial_powers, PowerVector):
        initial_powers = PowerVector.from_array(initial_powers, system.layout)
    x = initial_powers.to_log(cfg.p_floor).values

    trace = []
    relax = initial_relaxation(system, np.exp(x), cfg.z0_floor)
    try:
        x, phase1_rounds, relax = find_feasible_start(x, relax, system, cfg, trace)
    except InfeasibleProblemError as e:
        logger.info("Infeasible instance: %s", e)
        return SolverReport(
            final_powers=None,
            final_rates=None,
            objective_trace=trace,
            c1_activity=np.zeros(0),
            termination=Termination.INFEASIBLE,
            wall_time=time.perf_counter() - started,
            phase1_rounds=e.rounds,
        )

    true_value = system_objective(system, np.exp(x))
    trace.append(_trace_point(system, relax, x, 'outer', 0, 0))

    termination = Termination.ITERATION_CAP
    outer = 0
    inner_total = 0
    for outer in range(1, cfg.t1_max + 1):
        try:
            x_new, values, inner_converged = cccp_inner(x, relax, system, cfg, trace, outer)
        except InfeasibleStartError:
            logger.info("Outer iteration %d: start left the relaxed set, repairing with phase-I", outer)
            try:
                repaired, rounds, relax = find_feasible_start(x, relax, system, cfg, trace, outer)
            except InfeasibleProblemError:
                logger.warning("Phase-I repair failed, keeping the incumbent")
                termination = Termination.STALLED
                break
            phase1_rounds += rounds
            x_new, values, inner_converged = cccp_inner(repaired, relax, system, cfg, trace, outer)
        inner_total += len(values) - 1

        new_value = system_objective(system, np.exp(x_new))
        if new_value < true_value - REGRESSION_TOL:
            logger.warning("Outer iteration %d lowered the objective (%.9g -> %.9g), keeping the incumbent",
                           outer, true_value, new_value)
            termination = Termination.STALLED
            break

        relax = retighten(relax, system_sinrs(system, np.exp(x_new)), system.omega, cfg.z0_floor)
        x, delta, true_value = x_new, new_value - true_value, new_value
        trace.append(_trace_point(system, relax, x, 'outer', outer, 0))
        logger.debug("Outer iteration %d: objective %.9g (change %.3g)", outer, true_value, delta)
        if abs(delta) <= cfg.eps1:
            if inner_converged:
                termination = Termination.CONVERGED
            else:
                logger.info("Outer loop settled but its last CCCP run hit the iteration cap")
            break

    p = balance_backhaul(system, np.exp(x), cfg)
    activity = np.abs(coupling_gaps(system, p))
    if activity.size and activity.max() > cfg.eps_active:
        logger.debug("Capacity coupling still inactive after balancing (max gap %.3g)", activity.max())
    logger.info("%s after %d outer / %d inner iterations, objective %.6f",
                termination.value, outer, inner_total, system_objective(system, p))

    return SolverReport(
        final_powers=PowerVector.from_array(p, system.layout),
        final_rates=system_rate_triple(system, p),
        objective_trace=trace,
        c1_activity=activity,
        termination=termination,
        wall_time=time.perf_counter() - started,
        outer_iterations=outer,
        inner_iterations=inner_total,
        phase1_rounds=phase1_rounds,
    )


def solve_overall(channel, cfg, params, initial_powers=None):
    """
    Power allocation of the FD self-backhaul scheme with massive MIMO

    Args:
        channel: ChannelRealization or EffectiveGains
        cfg: SolverConfig (caps and QoS floors in cfg.limits)
        params: FadingParams
        initial_powers: optional PowerVector start

    Returns:
        SolverReport
    """
    gains = getattr(channel, 'g_eff', channel)
    system = build_link_system(gains, params, cfg.limits)
    report = solve_system(system, cfg, initial_powers)
    report.redraws = getattr(channel, 'redraws', 0)
    return report
