# -*- coding: utf-8 -*-
"""
Baseline Service - Comparison schemes and the brute-force oracle
Half duplex, wired backhaul and FD without massive MIMO, plus exhaustive
grid search used to check the proposed solver on small instances
"""

import logging
import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from cccp_service import solve_overall, solve_system
from exceptions import ConfigError, GridTooLargeError, NoFeasibleGridPointError
from models import (
    ChannelRealization, LinkSystem, PowerVector, RateTriple, SchemeId, SolverReport, Termination, TracePoint,
)
from rate_service import MU, SU, build_link_system, rate_from_sinr, system_rates, system_sinrs

logger = logging.getLogger('BASELINE')

# SU weight and throughput share under half duplex: backhaul and access alternate
HD_SHARE = 0.5


# ==================== SINGLE-STREAM GAINS ====================

def _mrt_leakage(h_rows, h_targets):
    """|h_target . w_j|^2 with w_j the matched-filter beam toward row j; shape (targets, rows)"""
    norms = np.linalg.norm(h_rows, axis=1)
    return np.abs(h_targets @ h_rows.conj().T) ** 2 / norms[None, :] ** 2


def single_stream_gains(channel):
    """
    Gains when the MBS serves one receiver at a time with a matched-filter beam

    Returns:
        dict with 'mu' (K,), 'bh' (N,), 'leak_mu' (N, K) and 'leak_bh' (N,):
        leakage of the beam toward MU k, or toward SBS n, into SU n
    """
    K, N = channel.K, channel.N
    h = channel.h_mbs
    h_mu, h_bh, h_su = h[:K], h[K:K + N], h[K + N:]
    gains = {
        'mu': channel.beta_mu * np.linalg.norm(h_mu, axis=1) ** 2,
        'bh': channel.beta_bh * np.linalg.norm(h_bh, axis=1) ** 2,
        'leak_mu': np.zeros((N, K)),
        'leak_bh': np.zeros(N),
    }
    if N:
        gains['leak_mu'] = channel.beta_mbs_su[:, None] * _mrt_leakage(h_mu, h_su)
        gains['leak_bh'] = channel.beta_mbs_su * np.diag(_mrt_leakage(h_bh, h_su))
    return gains


# ==================== HALF DUPLEX ====================

def hd_link_system(g, params, limits):
    """Backhaul and access in alternate half slots: no self-interference, SU throughput halved"""
    return build_link_system(g, params, limits, gamma_si=0.0, su_weight=HD_SHARE)


# ==================== WIRED BACKHAUL ====================

def wired_link_system(channel, params, limits):
    """
    Wired backhaul: the MBS serves one MU per slot at full power, SBS powers
    are the only variables and each SU rate is averaged over the K slots

    QoS floors are not imposed on this baseline.
    """
    K, N = channel.K, channel.N
    g = channel.g_eff
    gains = single_stream_gains(channel)
    sigma2 = params.noise_power
    p_max = limits.p_mbs_max_w

    # MU links first, then one SU link per (SBS, slot)
    n_links = K + N * K
    interference = np.zeros((n_links, N))
    interference[:K] = g.c_sbs_mu.T
    su_owner = np.repeat(np.arange(N), K)
    slot = np.tile(np.arange(K), N)
    interference[K:] = g.c_sbs_su.T[su_owner]
    noise = np.concatenate([np.full(K, sigma2), sigma2 + p_max * gains['leak_mu'][su_owner, slot]])

    return LinkSystem(
        layout=(0, 0, N),
        power_index=np.concatenate([np.full(K, -1), su_owner]),
        gain=np.concatenate([gains['mu'], g.a_su[su_owner]]),
        interference=interference,
        noise=noise,
        weight=np.full(n_links, 1.0 / K),
        floor=np.zeros(n_links),
        kind=np.array([MU] * K + [SU] * (N * K)),
        couplings=[],
        cap_groups=[(np.array([n]), limits.p_sbs_max_w, 'c3') for n in range(N)],
        omega=params.omega,
        var_caps=np.full(N, limits.p_sbs_max_w),
        rate_scale=np.full(n_links, 1.0 / K),
        fixed_power=np.concatenate([np.full(K, p_max), np.zeros(N * K)]),
        owner=np.concatenate([np.arange(K), su_owner]),
    )


# ==================== FD WITHOUT MASSIVE MIMO ====================

def _balanced_sbs_power(gain_bh, gain_su, leak, p_mbs, limits, params):
    """
    SBS power maximizing min(backhaul, access): access grows and backhaul
    shrinks with the SBS power, so the optimum is the crossing or the cap
    """
    sigma2, gamma = params.noise_power, params.gamma_si

    def sinr_gap(p):
        backhaul = p_mbs * gain_bh / (gamma * p + sigma2)
        access = p * gain_su / (p_mbs * leak + sigma2)
        return np.log(access) - np.log(backhaul)

    lo, hi = 1e-12, limits.p_sbs_max_w
    if gain_bh <= 0 or gain_su <= 0 or sinr_gap(hi) <= 0:
        return hi
    if sinr_gap(lo) >= 0:
        return lo
    return brentq(sinr_gap, lo, hi, xtol=1e-15, rtol=1e-12)


def _best_band_split(mu_full, link_full, limits):
    """
    Band share eta of the MU tier maximizing the delivered sum rate

    Delivered MU rate is eta / K times its full-band rate, delivered SU rate
    (1 - eta) / N times its full-band end-to-end rate. When the QoS floors
    cannot all be met the split maximizing the worst floor ratio is used.

    Returns:
        (eta, qos_met, function evaluations)
    """
    K, N = mu_full.size, link_full.size
    if N == 0:
        return 1.0, bool(np.all(mu_full / K >= limits.r_min_mu)), 0

    lo, hi = 0.0, 1.0
    with np.errstate(divide='ignore'):
        if limits.r_min_mu > 0:
            lo = max(lo, float(np.max(K * limits.r_min_mu / mu_full)))
        if limits.r_min_su > 0:
            hi = min(hi, 1.0 - float(np.max(N * limits.r_min_su / link_full)))

    def total(eta):
        return eta * mu_full.sum() / K + (1.0 - eta) * link_full.sum() / N

    if 0.0 <= hi - lo < 1e-12:
        return lo, True, 0
    if lo <= hi:
        result = minimize_scalar(lambda eta: -total(eta), bounds=(lo, hi), method='bounded',
                                 options={'xatol': 1e-10})
        best = max([lo, hi, float(result.x)], key=total)
        return best, True, int(result.nfev)

    def worst_ratio(eta):
        mu_ratio = eta * mu_full.min() / (K * max(limits.r_min_mu, 1e-12))
        su_ratio = (1.0 - eta) * link_full.min() / (N * max(limits.r_min_su, 1e-12))
        return min(mu_ratio, su_ratio)

    result = minimize_scalar(lambda eta: -worst_ratio(eta), bounds=(0.0, 1.0), method='bounded',
                             options={'xatol': 1e-10})
    return float(result.x), False, int(result.nfev)


def fd_no_mmimo_solution(channel, params, limits):
    """
    FD self-backhaul with a single-stream MBS: MUs share a band share eta by
    TDMA, the N backhauls split the rest by FDMA and every SBS relays to its
    SU in its own sub-band. Powers are spread flat over the occupied band,
    so every SINR is written with full-band powers.

    Returns:
        SolverReport; Converged with the best band split, or Infeasible
        with no powers when no split meets the QoS floors
    """
    started = time.perf_counter()
    K, N = channel.K, channel.N
    g = channel.g_eff
    gains = single_stream_gains(channel)
    p_max = limits.p_mbs_max_w
    sigma2 = params.noise_power

    mu_full = rate_from_sinr(p_max * gains['mu'] / sigma2, params.omega)
    p_sbs = np.array([
        _balanced_sbs_power(gains['bh'][n], g.a_su[n], gains['leak_bh'][n], p_max, limits, params)
        for n in range(N)
    ])
    bh_full = rate_from_sinr(p_max * gains['bh'] / (params.gamma_si * p_sbs + sigma2), params.omega)
    access_full = rate_from_sinr(p_sbs * g.a_su / (p_max * gains['leak_bh'] + sigma2), params.omega)
    link_full = np.minimum(bh_full, access_full)

    eta, qos_met, evaluations = _best_band_split(np.atleast_1d(mu_full), np.atleast_1d(link_full), limits)
    if not qos_met:
        logger.info("FD without massive MIMO cannot meet the QoS floors at any band split")
        return SolverReport(
            final_powers=None,
            final_rates=None,
            objective_trace=[],
            c1_activity=np.zeros(0),
            termination=Termination.INFEASIBLE,
            wall_time=time.perf_counter() - started,
            inner_iterations=evaluations,
            redraws=channel.redraws,
        )

    share = (1.0 - eta) / N if N else 0.0
    rates = RateTriple.build(eta / K * mu_full, share * bh_full, share * link_full)
    powers = PowerVector(np.full(K, eta * p_max / K), np.full(N, (1.0 - eta) * p_max / N if N else 0.0), p_sbs)
    return SolverReport(
        final_powers=powers,
        final_rates=rates,
        objective_trace=[TracePoint('outer', 0, 0, rates.total, rates.total, 0.0)],
        c1_activity=np.abs(share * (bh_full - access_full)) if N else np.zeros(0),
        termination=Termination.CONVERGED,
        wall_time=time.perf_counter() - started,
        inner_iterations=evaluations,
        redraws=channel.redraws,
    )


# ==================== DISPATCH ====================

def run_scheme(scheme, channel, cfg, params):
    """
    Solve one scheme on one channel realization

    Args:
        scheme: SchemeId
        channel: ChannelRealization
        cfg: SolverConfig
        params: FadingParams

    Returns:
        SolverReport
    """
    scheme = SchemeId(scheme)
    if scheme == SchemeId.PROPOSED_FD_MASSIVE_MIMO:
        return solve_overall(channel, cfg, params)
    if scheme == SchemeId.HD_MASSIVE_MIMO:
        report = solve_system(hd_link_system(channel.g_eff, params, cfg.limits), cfg)
    elif scheme == SchemeId.WIRED_NO_MASSIVE_MIMO:
        report = solve_system(wired_link_system(channel, params, cfg.limits), cfg)
    elif scheme == SchemeId.FD_NO_MASSIVE_MIMO:
        return fd_no_mmimo_solution(channel, params, cfg.limits)
    else:
        raise ConfigError(f"unknown scheme {scheme}")
    report.redraws = channel.redraws
    return report


# ==================== BRUTE FORCE ORACLE ====================

@dataclass(frozen=True)
class GridSpec:
    """Log-spaced grid from p_min to each variable's cap"""
    points_per_dim: int = 12
    p_min: float = 1e-6
    max_points: int = 100_000_000
    chunk: int = 200_000

    def axes(self, caps):
        if self.points_per_dim < 2:
            raise ConfigError("a grid needs at least 2 points per dimension")
        return [np.geomspace(self.p_min, cap, self.points_per_dim) for cap in caps]

    def log_steps(self, caps):
        return np.log(np.asarray(caps, dtype=float) / self.p_min) / (self.points_per_dim - 1)

    def refine(self):
        """Halve the spacing; every point of this grid stays on the refined one"""
        return replace(self, points_per_dim=2 * self.points_per_dim - 1)


def _as_system(channel, limits, params):
    if isinstance(channel, LinkSystem):
        return channel
    if params is None:
        raise ConfigError("bfs_oracle needs FadingParams unless it is given a LinkSystem")
    gains = channel.g_eff if isinstance(channel, ChannelRealization) else channel
    return build_link_system(gains, params, limits)


def grid_feasible(system, P, tol=1e-8):
    """Row mask of the grid points in P (G, n) meeting every constraint"""
    rates = system_rates(system, P)
    ok = np.ones(P.shape[0], dtype=bool)
    for b, s in system.couplings:
        ok &= rates[:, b] - rates[:, s] >= -tol
    for idx, cap, _ in system.cap_groups:
        ok &= P[:, idx].sum(axis=1) <= cap * (1.0 + tol)
    floored = np.flatnonzero(system.floor > 0)
    if floored.size:
        ok &= np.all(rates[:, floored] >= system.floor[floored] - tol, axis=1)
    return ok


def bfs_oracle(channel, limits, grid, params=None):
    """
    Exhaustive search over the log-spaced power grid

    Args:
        channel: ChannelRealization, EffectiveGains or a ready LinkSystem
        limits: PowerLimits
        grid: GridSpec
        params: FadingParams (not needed for a LinkSystem)

    Returns:
        (PowerVector, objective) of the best feasible grid point

    Raises:
        GridTooLargeError: points_per_dim ** n exceeds grid.max_points
        NoFeasibleGridPointError: no grid point meets the constraints
    """
    system = _as_system(channel, limits, params)
    d = system.n_vars
    total = grid.points_per_dim ** d
    if total > grid.max_points:
        raise GridTooLargeError(f"{grid.points_per_dim}^{d} = {total} grid points exceed {grid.max_points}")

    axes = grid.axes(system.var_caps)
    shape = (grid.points_per_dim,) * d
    best_value, best_point = -np.inf, None
    for start in range(0, total, grid.chunk):
        flat = np.arange(start, min(total, start + grid.chunk))
        index = np.unravel_index(flat, shape)
        P = np.column_stack([axes[j][index[j]] for j in range(d)])
        feasible = grid_feasible(system, P)
        if not feasible.any():
            continue
        values = system_rates(system, P[feasible]) @ system.weight
        i = int(np.argmax(values))
        if values[i] > best_value:
            best_value, best_point = float(values[i]), P[feasible][i]

    if best_point is None:
        raise NoFeasibleGridPointError(f"none of the {total} grid points is feasible")
    logger.debug("Brute force over %d points: best objective %.6f", total, best_value)
    return PowerVector.from_array(best_point, system.layout), best_value


def grid_resolution_slack(system, grid, samples=256, seed=0):
    """
    Objective change allowed by the grid spacing: sum_i L_i * step_i / 2 where
    L_i is the largest |dR/d ln P_i| seen over random points of the log box
    """
    rng = np.random.default_rng(seed)
    lo = np.log(grid.p_min)
    hi = np.log(system.var_caps)
    x = lo + (hi - lo) * rng.uniform(size=(samples, system.n_vars))
    P = np.exp(x)

    sinrs = system_sinrs(system, P)
    z = sinrs / system.omega
    saturation = z / (1.0 + z) / np.log(2.0)               # dR / d ln sinr
    denom = P @ system.interference.T + system.noise        # (S, L)
    # d ln sinr_l / d x_i = [i drives l] - I_li P_i / denom_l
    shares = system.interference[None, :, :] * P[:, None, :] / denom[:, :, None]
    own = np.zeros((system.n_links, system.n_vars))
    driven = system.power_index >= 0
    own[np.flatnonzero(driven), system.power_index[driven]] = 1.0
    dlog = own[None, :, :] - shares
    dR = np.einsum('l,sl,sli->si', system.weight, saturation, dlog)
    lipschitz = np.abs(dR).max(axis=0)
    return float(np.sum(lipschitz * grid.log_steps(system.var_caps)) / 2.0)
