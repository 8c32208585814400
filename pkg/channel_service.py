# -*- coding: utf-8 -*-
"""
Channel Service - Network droppings, large/small scale fading and ZF precoding
Reduces every realization to the scalar effective gains used by the SINR formulas
"""

import logging

import numpy as np

from exceptions import ConfigError, SingularChannelError
from models import ChannelRealization, EffectiveGains, NetworkTopology

logger = logging.getLogger('CHANNEL')

# Independent random streams derived from one seed
TOPOLOGY_STREAM = 0
FADING_STREAM = 1

MAX_REDRAWS = 10
ZF_CONDITION_LIMIT = 1e10


def make_rng(seed, *stream):
    """Seeded generator; an existing Generator is passed through untouched"""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng([int(seed), *[int(s) for s in stream]])


def validate_counts(M, K, N):
    """Check the MBS antenna budget against the number of spatial streams"""
    if K < 1 or N < 0 or M < 1:
        raise ConfigError(f"need K >= 1, N >= 0, M >= 1 (got K={K}, N={N}, M={M})")
    if K + N >= M:
        raise ConfigError(f"K + N must be smaller than M (got K + N = {K + N}, M = {M})")
    if K + N > M / 4:
        logger.warning("K + N = %d is more than M/4 = %.1f, array gain will be small", K + N, M / 4)


# ==================== TOPOLOGY ====================

def _uniform_in_disc(rng, centers, radius, area_side):
    """Uniform points in discs around each center, redrawn until inside the square"""
    points = np.empty_like(centers)
    pending = np.arange(centers.shape[0])
    while pending.size:
        r = radius * np.sqrt(rng.uniform(size=pending.size))
        theta = rng.uniform(0.0, 2.0 * np.pi, size=pending.size)
        candidate = centers[pending] + np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        inside = np.all((candidate >= 0.0) & (candidate <= area_side), axis=1)
        points[pending[inside]] = candidate[inside]
        pending = pending[~inside]
    return points


def drop_topology(config, seed):
    """
    Random dropping of SBSs, MUs and SUs over the square area

    Args:
        config: ScenarioConfig (num_antennas, num_mus, num_sbs, area_side, fading.r_su)
        seed: integer seed

    Returns:
        NetworkTopology with the MBS at the area center
    """
    M, K, N = config.num_antennas, config.num_mus, config.num_sbs
    validate_counts(M, K, N)
    side = float(config.area_side)
    if not side > 0:
        raise ConfigError(f"area_side must be > 0, got {side}")

    rng = make_rng(seed, TOPOLOGY_STREAM)
    sbs = rng.uniform(0.0, side, size=(N, 2))
    mus = rng.uniform(0.0, side, size=(K, 2))
    sus = _uniform_in_disc(rng, sbs, config.fading.r_su, side)

    return NetworkTopology(
        area_side=side,
        mbs_position=np.array([side / 2.0, side / 2.0]),
        sbs_positions=sbs,
        mu_positions=mus,
        su_positions=sus,
        M=M,
    )


# ==================== FADING ====================

def large_scale_gain(d, params, shadow_draw):
    """
    Path loss and log-normal shadowing: phi * zeta / d^alpha

    Args:
        d: distance(s) in meters, clamped below by params.d_min
        params: FadingParams
        shadow_draw: standard normal draw(s), zeta = 10^(draw * sigma_dB / 10)
    """
    d = np.asarray(d, dtype=float)
    shadow_draw = np.asarray(shadow_draw, dtype=float)
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(shadow_draw))):
        raise ConfigError("large_scale_gain needs finite distances and shadow draws")
    zeta = 10.0 ** (shadow_draw * params.shadow_sigma_db / 10.0)
    return params.phi * zeta / np.maximum(d, params.d_min) ** params.alpha_pl


def draw_small_scale(dims, seed):
    """
    I.i.d. circularly symmetric complex Gaussian entries with unit variance

    Args:
        dims: int or shape tuple, every entry positive; an int n gives a
            vector of shape (n,), so n = 1 is a one-element array
        seed: integer seed or numpy Generator
    """
    shape = (dims,) if np.isscalar(dims) else tuple(dims)
    if any(int(n) < 1 for n in shape):
        raise ConfigError(f"small scale dimensions must be positive, got {shape}")
    rng = make_rng(seed)
    re = rng.standard_normal(size=shape)
    im = rng.standard_normal(size=shape)
    return (re + 1j * im) / np.sqrt(2.0)


def zf_precoder(H_group):
    """
    Zero-forcing precoder with unit-norm columns

    Args:
        H_group: (K+N) x M stacked channel rows

    Returns:
        W (M x (K+N)) with h_j . w_k = 0 for j != k and ||w_k|| = 1
    """
    H = np.atleast_2d(np.asarray(H_group, dtype=complex))
    rows, M = H.shape
    if rows > M:
        raise SingularChannelError(f"{rows} streams cannot be zero-forced with {M} antennas")
    if not np.all(np.isfinite(H)):
        raise SingularChannelError("channel matrix has non-finite entries")
    cond = np.linalg.cond(H)
    if not np.isfinite(cond) or cond > ZF_CONDITION_LIMIT:
        raise SingularChannelError(f"ZF group channel is rank deficient (condition number {cond:.3g})")

    W = np.linalg.pinv(H)
    return W / np.linalg.norm(W, axis=0, keepdims=True)


def _pairwise_distances(a, b):
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)


def build_effective_gains(topology, params, seed):
    """
    Draw shadowing and Rayleigh fading for one topology and build the effective gains

    A singular ZF draw is redrawn with the next sub-seed; the count is kept on
    the realization.

    Args:
        topology: NetworkTopology
        params: FadingParams
        seed: integer seed

    Returns:
        ChannelRealization
    """
    K, N, M = topology.K, topology.N, topology.M
    mbs = topology.mbs_position[None, :]

    d_mu = _pairwise_distances(mbs, topology.mu_positions)[0]
    d_bh = _pairwise_distances(mbs, topology.sbs_positions)[0]
    d_mbs_su = _pairwise_distances(mbs, topology.su_positions)[0]
    d_su = np.linalg.norm(topology.sbs_positions - topology.su_positions, axis=1)
    d_sbs_mu = _pairwise_distances(topology.sbs_positions, topology.mu_positions)
    d_sbs_sbs = _pairwise_distances(topology.sbs_positions, topology.sbs_positions)
    d_sbs_su = _pairwise_distances(topology.sbs_positions, topology.su_positions)

    redraws = 0
    while True:
        rng = make_rng(seed, FADING_STREAM, redraws)

        def shadow(shape):
            return rng.standard_normal(size=shape)

        beta_mu = large_scale_gain(d_mu, params, shadow(K))
        beta_bh = large_scale_gain(d_bh, params, shadow(N))
        beta_mbs_su = large_scale_gain(d_mbs_su, params, shadow(N))
        beta_su = large_scale_gain(d_su, params, shadow(N))
        beta_sbs_mu = large_scale_gain(d_sbs_mu, params, shadow((N, K)))
        off_diag = 1.0 - np.eye(N)
        beta_sbs_sbs = large_scale_gain(d_sbs_sbs, params, shadow((N, N))) * off_diag
        beta_sbs_su = large_scale_gain(d_sbs_su, params, shadow((N, N))) * off_diag

        h_mbs = draw_small_scale((K + 2 * N, M), rng)
        h_scalars = {
            'su': draw_small_scale(N, rng) if N else np.zeros(0, dtype=complex),
            'sbs_mu': draw_small_scale((N, K), rng) if N else np.zeros((0, K), dtype=complex),
            'sbs_sbs': draw_small_scale((N, N), rng) if N else np.zeros((0, 0), dtype=complex),
            'sbs_su': draw_small_scale((N, N), rng) if N else np.zeros((0, 0), dtype=complex),
        }
        try:
            W = zf_precoder(h_mbs[:K + N])
            break
        except SingularChannelError as e:
            redraws += 1
            logger.warning("Singular ZF draw (%s), redrawing fading (%d)", e, redraws)
            if redraws > MAX_REDRAWS:
                raise

    # h_j . w_k for every MBS-side row against every precoder column
    hw2 = np.abs(h_mbs @ W) ** 2
    su_rows = hw2[K + N:]                       # (N, K + N)

    g_eff = EffectiveGains(
        a_mu=beta_mu * np.diag(hw2[:K, :K]).copy(),
        a_bh=beta_bh * np.diag(hw2[K:K + N, K:K + N]).copy(),
        a_su=beta_su * np.abs(h_scalars['su']) ** 2,
        c_sbs_mu=beta_sbs_mu * np.abs(h_scalars['sbs_mu']) ** 2,
        c_sbs_sbs=beta_sbs_sbs * np.abs(h_scalars['sbs_sbs']) ** 2,
        c_sbs_su=beta_sbs_su * np.abs(h_scalars['sbs_su']) ** 2,
        c_mbs_su_mu=(su_rows[:, :K] * beta_mbs_su[:, None]).T.copy(),
        c_mbs_su_bh=(su_rows[:, K:] * beta_mbs_su[:, None]).T.copy(),
    )

    return ChannelRealization(
        topology=topology,
        beta_mu=beta_mu,
        beta_bh=beta_bh,
        beta_mbs_su=beta_mbs_su,
        beta_su=beta_su,
        beta_cross_sbs_mu=beta_sbs_mu,
        beta_cross_sbs_sbs=beta_sbs_sbs,
        beta_cross_sbs_su=beta_sbs_su,
        h_mbs=h_mbs,
        h_scalars=h_scalars,
        W=W,
        g_eff=g_eff,
        redraws=redraws,
    )


def generate_realization(config, seed):
    """Topology plus channel realization for one dropping"""
    topology = drop_topology(config, seed)
    return build_effective_gains(topology, config.fading, seed)
