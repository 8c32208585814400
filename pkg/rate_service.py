# -*- coding: utf-8 -*-
"""
Rate Service - SINRs, gap-adjusted Shannon rates and the original constraint set
Every scheme is reduced to a LinkSystem so the same evaluators serve all of them
"""

import numpy as np

from models import ConstraintReport, LinkSystem, PowerVector, RateTriple

MU, BH, SU = 'mu', 'bh', 'su'


# ==================== LINK SYSTEMS ====================

def build_link_system(g, params, limits, gamma_si=None, su_weight=1.0, su_floor_scale=1.0):
    """
    Link system of the FD self-backhaul scheme with massive MIMO

    Variables and links share the order [MU 1..K, backhaul 1..N, SU 1..N], so
    link i is driven by power variable i.

    Args:
        g: EffectiveGains
        params: FadingParams (noise power, sinr gap, self-interference)
        limits: PowerLimits
        gamma_si: overrides params.gamma_si (0 models half duplex reception)
        su_weight: objective weight of SU links and reported throughput share
            of every SBS link (backhaul and access)
        su_floor_scale: multiplies the SU QoS floor on the raw link rate

    Returns:
        LinkSystem
    """
    K, N = g.K, g.N
    n = K + 2 * N
    gamma = params.gamma_si if gamma_si is None else gamma_si
    mu_idx = np.arange(K)
    bh_idx = K + np.arange(N)
    su_idx = K + N + np.arange(N)

    gain = np.concatenate([g.a_mu, g.a_bh, g.a_su]).astype(float)
    interference = np.zeros((n, n))
    # MU k hears every SBS
    interference[np.ix_(mu_idx, su_idx)] = g.c_sbs_mu.T
    # SBS n hears the other SBSs plus its own residual self-interference
    interference[np.ix_(bh_idx, su_idx)] = g.c_sbs_sbs.T + gamma * np.eye(N)
    # SU n hears MBS MU streams, MBS backhaul streams and the other SBSs
    interference[np.ix_(su_idx, mu_idx)] = g.c_mbs_su_mu.T
    interference[np.ix_(su_idx, bh_idx)] = g.c_mbs_su_bh.T
    interference[np.ix_(su_idx, su_idx)] = g.c_sbs_su.T

    weight = np.concatenate([np.ones(K), np.zeros(N), np.full(N, su_weight)])
    floor = np.concatenate([np.full(K, limits.r_min_mu), np.zeros(N),
                            np.full(N, limits.r_min_su * su_floor_scale)])
    kind = np.array([MU] * K + [BH] * N + [SU] * N)

    cap_groups = [(np.concatenate([mu_idx, bh_idx]), limits.p_mbs_max_w, 'c2')]
    cap_groups += [(np.array([i]), limits.p_sbs_max_w, 'c3') for i in su_idx]
    var_caps = np.concatenate([np.full(K + N, limits.p_mbs_max_w), np.full(N, limits.p_sbs_max_w)])

    return LinkSystem(
        layout=(K, N, N),
        power_index=np.arange(n),
        gain=gain,
        interference=interference,
        noise=np.full(n, params.noise_power),
        weight=weight,
        floor=floor,
        kind=kind,
        couplings=[(int(b), int(s)) for b, s in zip(bh_idx, su_idx)],
        cap_groups=cap_groups,
        omega=params.omega,
        var_caps=var_caps,
        rate_scale=np.concatenate([np.ones(K), np.full(2 * N, su_weight)]),
    )


def _as_array(P):
    return P.as_array() if isinstance(P, PowerVector) else np.asarray(P, dtype=float)


def system_sinrs(system, P):
    """SINR of every link of a LinkSystem at power array P, shape (n,) or (G, n)"""
    p = _as_array(P)
    signal = system.signal_power(p) * system.gain
    return signal / (p @ system.interference.T + system.noise)


def system_rates(system, P):
    """Raw gap-adjusted rate of every link (bits/s/Hz)"""
    return rate_from_sinr(system_sinrs(system, P), system.omega)


def system_objective(system, P):
    """Weighted sum rate the scheme maximizes"""
    return float(np.dot(system.weight, system_rates(system, P)))


def system_rate_triple(system, P):
    """Delivered rates (slot/band shares applied) grouped by link kind"""
    delivered = system.scale() * system_rates(system, P)
    grouped = []
    for kind in (MU, BH, SU):
        idx, owners = system.owners(kind)
        size = int(owners.max()) + 1 if owners.size else 0
        grouped.append(np.bincount(owners, weights=delivered[idx], minlength=size))
    return RateTriple.build(*grouped)


def check_system_constraints(system, P, tol=1e-8):
    """
    Signed residuals of C1..C5 for any LinkSystem

    Power residuals are checked with tol scaled by the cap.
    """
    p = _as_array(P)
    rates = system_rates(system, p)

    c1 = np.array([rates[b] - rates[s] for b, s in system.couplings])
    c2_res = [cap - np.sum(p[idx]) for idx, cap, label in system.cap_groups if label == 'c2']
    c3 = np.array([cap - np.sum(p[idx]) for idx, cap, label in system.cap_groups if label == 'c3'])
    mu = system.links_of(MU)
    su = system.links_of(SU)
    c4 = rates[mu] - system.floor[mu]
    c5 = rates[su] - system.floor[su]
    if c1.size == 0:
        c1 = np.zeros(0)
    c2 = float(min(c2_res)) if c2_res else float('inf')

    power_ok = all(cap - np.sum(p[idx]) >= -tol * max(1.0, cap) for idx, cap, _ in system.cap_groups)
    rate_residuals = np.concatenate([c1, c4, c5])
    rates_ok = bool(np.all(rate_residuals >= -tol)) if rate_residuals.size else True
    return ConstraintReport(c1=c1, c2=c2, c3=c3, c4=c4, c5=c5, tolerance=tol,
                            feasible=bool(power_ok and rates_ok))


# ==================== PER-LINK SINRS ====================

def sinr_mu(k, P, g, params):
    """SINR of MU k: P^m_k a_mu[k] / (sum_n P^s_n c_sbs_mu[n,k] + sigma^2)"""
    return float(P.p_mu[k] * g.a_mu[k] / (np.dot(P.p_sbs, g.c_sbs_mu[:, k]) + params.noise_power))


def sinr_bh(n, P, g, params):
    """SINR of the backhaul into SBS n, including the gamma self-interference term"""
    intra = np.dot(P.p_sbs, g.c_sbs_sbs[:, n]) - P.p_sbs[n] * g.c_sbs_sbs[n, n]
    denom = intra + params.gamma_si * P.p_sbs[n] + params.noise_power
    return float(P.p_bh[n] * g.a_bh[n] / denom)


def sinr_su(n, P, g, params):
    """SINR of the SU served by SBS n (inter-tier MBS leakage plus intra-tier SBS terms)"""
    inter = np.dot(P.p_mu, g.c_mbs_su_mu[:, n]) + np.dot(P.p_bh, g.c_mbs_su_bh[:, n])
    intra = np.dot(P.p_sbs, g.c_sbs_su[:, n]) - P.p_sbs[n] * g.c_sbs_su[n, n]
    return float(P.p_sbs[n] * g.a_su[n] / (inter + intra + params.noise_power))


def rate_from_sinr(sinr, omega):
    return np.log2(1.0 + np.asarray(sinr, dtype=float) / omega)


def rate(sinr, params):
    """R = log2(1 + sinr / omega)"""
    value = rate_from_sinr(sinr, params.omega)
    return float(value) if np.ndim(value) == 0 else value


def objective(P, g, params):
    """All K + 2N rates and the MU + SU sum"""
    r_mu = [rate(sinr_mu(k, P, g, params), params) for k in range(g.K)]
    r_bh = [rate(sinr_bh(n, P, g, params), params) for n in range(g.N)]
    r_su = [rate(sinr_su(n, P, g, params), params) for n in range(g.N)]
    return RateTriple.build(r_mu, r_bh, r_su)


def check_constraints(P, g, params, limits, tol=1e-8):
    """
    Signed residuals of the original problem

    Returns:
        ConstraintReport with C1 (R^b - R^s), C2 (MBS budget), C3 (SBS budgets),
        C4/C5 (rate - R_min) and the all-feasible flag
    """
    system = build_link_system(g, params, limits)
    return check_system_constraints(system, P, tol)
