# -*- coding: utf-8 -*-
"""
Relaxation Service - Successive convex approximation of the link rates
Lower-bounds every rate by alpha * log2(z) + mu, tight at an anchor SINR, and
writes the bounds, the capacity coupling and the QoS floors as concave forms
in the log-power variables x = ln P
"""

import numpy as np

from convex_engine import ConcaveForm
from exceptions import ConfigError
from models import LogPowerVector, PowerLimits, RelaxationState
from rate_service import BH, MU, SU, build_link_system, system_sinrs

LN2 = np.log(2.0)
# Gains below this are treated as this value inside logarithms
GAIN_FLOOR = 1e-300


def scam_constants(z0):
    """
    Coefficients of the bound log2(1 + z) >= alpha * log2(z) + mu, tight at z = z0

    Args:
        z0: anchor value(s) of z = sinr / omega, strictly positive

    Returns:
        (alpha, mu) with alpha = z0 / (1 + z0) and
        mu = log2(1 + z0) - alpha * log2(z0)
    """
    z0 = np.asarray(z0, dtype=float)
    if np.any(~np.isfinite(z0)) or np.any(z0 <= 0):
        raise ConfigError("SCAM anchors must be finite and strictly positive")
    alpha = z0 / (1.0 + z0)
    mu = np.log1p(z0) / LN2 - alpha * np.log2(z0)
    if z0.ndim == 0:
        return float(alpha), float(mu)
    return alpha, mu


def initial_relaxation(system, P, z0_floor=1e-9):
    """RelaxationState anchored at the link SINRs of power array P"""
    z0 = np.maximum(system_sinrs(system, P) / system.omega, z0_floor)
    alpha, mu = scam_constants(z0)
    return RelaxationState(alpha=np.atleast_1d(alpha), mu=np.atleast_1d(mu), anchor_z=z0)


def retighten(relax, current_sinrs, omega, z0_floor=1e-9):
    """
    Move every anchor to the current SINR so each relaxed rate equals the
    true rate at the current point

    Args:
        relax: previous RelaxationState (only its size is used)
        current_sinrs: link SINRs at the current point
        omega: SINR gap
        z0_floor: lower clamp on the anchors
    """
    current_sinrs = np.asarray(current_sinrs, dtype=float)
    if current_sinrs.shape != relax.anchor_z.shape:
        raise ConfigError(f"expected {relax.anchor_z.size} SINRs, got {current_sinrs.size}")
    z0 = np.maximum(current_sinrs / omega, z0_floor)
    alpha, mu = scam_constants(z0)
    return RelaxationState(alpha=np.atleast_1d(alpha), mu=np.atleast_1d(mu), anchor_z=z0)


# ==================== LOG-SINR FORMS ====================

def log2_sinr_form(system, link):
    """
    log2 of a link SINR as a concave form:
    (x_idx + ln(gain) - ln(sum_i I_i e^{x_i} + noise)) / ln 2

    A fixed-power link folds its power into the constant.
    """
    n = system.n_vars
    idx = int(system.power_index[link])
    gain = max(float(system.gain[link]), GAIN_FLOOR)
    linear = np.zeros(n)
    const = np.log(gain) / LN2
    if idx >= 0:
        linear[idx] = 1.0 / LN2
    else:
        const += np.log(float(system.fixed_power[link])) / LN2
    return ConcaveForm(
        n,
        const=const,
        linear=linear,
        lse_weights=[1.0 / LN2],
        lse_coeffs=system.interference[link][None, :],
        lse_offsets=[float(system.noise[link])],
    )


def relaxed_rate_form(system, relax, link):
    """alpha * log2(sinr / omega) + mu of one link"""
    alpha = float(relax.alpha[link])
    return log2_sinr_form(system, link).scaled(alpha) + (float(relax.mu[link]) - alpha * np.log2(system.omega))


def relaxed_objective_form(system, relax):
    """Weighted sum of the relaxed rates; links with zero weight are left out"""
    total = ConcaveForm.affine(system.n_vars)
    for link in np.flatnonzero(system.weight > 0):
        total = total + relaxed_rate_form(system, relax, link).scaled(system.weight[link])
    return total


def dc_pair(system, relax, coupling):
    """
    Capacity coupling as a difference of concave forms

    Returns:
        (relaxed backhaul rate, relaxed access rate); the constraint is
        first - second >= 0 and only the second is linearized
    """
    bh, su = coupling
    return relaxed_rate_form(system, relax, bh), relaxed_rate_form(system, relax, su)


def exact_dc_pair(system, coupling):
    """
    The same coupling without relaxation: log2 sinr_b - log2 sinr_s >= 0,
    equivalent to R^b >= R^s since both links share the gap omega
    """
    bh, su = coupling
    return log2_sinr_form(system, bh), log2_sinr_form(system, su)


def floor_form(system, link):
    """QoS floor R >= R_min written as log2 sinr - log2(omega (2^R_min - 1)) >= 0"""
    threshold = system.omega * (2.0 ** float(system.floor[link]) - 1.0)
    return log2_sinr_form(system, link) - np.log2(threshold)


def floor_forms(system):
    return [floor_form(system, link) for link in np.flatnonzero(system.floor > 0)]


def cap_forms(system):
    """Power budgets normalized by their cap: 1 - sum_i e^{x_i} / cap >= 0"""
    forms = []
    for idx, cap, _ in system.cap_groups:
        exp_coeffs = np.zeros(system.n_vars)
        exp_coeffs[idx] = 1.0 / cap
        forms.append(ConcaveForm(system.n_vars, const=1.0, exp_coeffs=exp_coeffs))
    return forms


def box_bounds(system, p_floor):
    """ln(p_floor) <= x_i <= ln(cap_i) + 1"""
    lower = np.full(system.n_vars, np.log(p_floor))
    upper = np.log(system.var_caps) + 1.0
    return lower, upper


# ==================== PROPOSED-SCHEME VIEWS ====================

def _log_values(Ptilde):
    return Ptilde.values if isinstance(Ptilde, LogPowerVector) else np.asarray(Ptilde, dtype=float)


def _proposed(g, params):
    return build_link_system(g, params, PowerLimits())


def _link_value(kind, index, Ptilde, g, params, relax):
    system = _proposed(g, params)
    link = system.links_of(kind)[index]
    return relaxed_rate_form(system, relax, link).value(_log_values(Ptilde))


def relaxed_rate_mu(k, Ptilde, g, params, relax):
    return _link_value(MU, k, Ptilde, g, params, relax)


def relaxed_rate_bh(n, Ptilde, g, params, relax):
    return _link_value(BH, n, Ptilde, g, params, relax)


def relaxed_rate_su(n, Ptilde, g, params, relax):
    return _link_value(SU, n, Ptilde, g, params, relax)


def relaxed_objective(Ptilde, g, params, relax):
    """Sum of relaxed MU and SU rates at log powers Ptilde"""
    system = _proposed(g, params)
    return relaxed_objective_form(system, relax).value(_log_values(Ptilde))


def gradients(Ptilde, g, params, relax):
    """
    Closed-form gradients of the relaxed rates with respect to x = ln P

    Returns:
        dict with 'mu' (K, n), 'bh' (N, n), 'su' (N, n) and 'objective' (n,)
    """
    system = _proposed(g, params)
    x = _log_values(Ptilde)
    rows = np.array([relaxed_rate_form(system, relax, link).gradient(x) for link in range(system.n_links)])
    rows = rows.reshape(system.n_links, system.n_vars)
    return {
        'mu': rows[system.links_of(MU)],
        'bh': rows[system.links_of(BH)],
        'su': rows[system.links_of(SU)],
        'objective': system.weight @ rows,
    }


def dc_constraint(n, Ptilde, g, params, relax):
    """Relaxed backhaul and access rates of SBS n, kept apart for the CCCP"""
    system = _proposed(g, params)
    x = _log_values(Ptilde)
    concave_b, concave_s = dc_pair(system, relax, system.couplings[n])
    return concave_b.value(x), concave_s.value(x)
