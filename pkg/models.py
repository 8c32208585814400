# -*- coding: utf-8 -*-
"""
Domain types of the self-backhaul power allocation simulator
Topologies, channels, power vectors, rates, solver settings and result rows
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from exceptions import ConfigError


# ==================== UNIT HELPERS ====================

def dbm_to_watts(dbm):
    """Convert a power in dBm to watts"""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def noise_power_watts(psd_dbm_hz, bandwidth_hz):
    """Thermal noise power over the bandwidth: PSD (dBm/Hz) x B"""
    return dbm_to_watts(psd_dbm_hz + 10.0 * math.log10(bandwidth_hz))


def sinr_gap_from_ber(target_ber):
    """
    SNR gap of an uncoded M-QAM link at a target bit error rate

    Returns:
        omega = -2 ln(5 Pe) / 3 (about 3.53 at Pe = 1e-3)
    """
    if not 0.0 < target_ber < 0.2:
        raise ConfigError(f"target_ber must lie in (0, 0.2), got {target_ber}")
    return -2.0 * math.log(5.0 * target_ber) / 3.0


# ==================== ENUMS ====================

class SchemeId(str, Enum):
    PROPOSED_FD_MASSIVE_MIMO = 'proposed_fd_mmimo'
    HD_MASSIVE_MIMO = 'hd_mmimo'
    FD_NO_MASSIVE_MIMO = 'fd_no_mmimo'
    WIRED_NO_MASSIVE_MIMO = 'wired_no_mmimo'


class Termination(str, Enum):
    CONVERGED = 'Converged'
    ITERATION_CAP = 'IterationCap'
    # stopped early on a regression or a failed repair, incumbent kept
    STALLED = 'Stalled'
    INFEASIBLE = 'Infeasible'
    ERROR = 'Error'


class SweepAxis(str, Enum):
    NUM_MUS = 'num_mus'
    NUM_SBS = 'num_sbs'
    GAMMA_SI = 'gamma_si'
    NONE = 'none'


# ==================== CHANNEL MODEL ====================

@dataclass(frozen=True)
class FadingParams:
    phi: float = 1.0
    alpha_pl: float = 3.0
    shadow_sigma_db: float = 8.0
    noise_psd_dbm_hz: float = -174.0
    bandwidth_hz: float = 10e6
    gamma_si: float = 1e-5
    target_ber: float = 1e-3
    # None derives the gap from target_ber; 1.0 gives pure Shannon rates
    sinr_gap: Optional[float] = None
    d_min: float = 1.0
    r_su: float = 40.0

    @property
    def noise_power(self):
        return noise_power_watts(self.noise_psd_dbm_hz, self.bandwidth_hz)

    @property
    def omega(self):
        if self.sinr_gap is not None:
            return float(self.sinr_gap)
        return sinr_gap_from_ber(self.target_ber)

    def validate(self):
        if not self.phi > 0:
            raise ConfigError(f"phi must be > 0, got {self.phi}")
        if not self.bandwidth_hz > 0:
            raise ConfigError(f"bandwidth_hz must be > 0, got {self.bandwidth_hz}")
        if not self.gamma_si >= 0:
            raise ConfigError(f"gamma_si must be >= 0, got {self.gamma_si}")
        if not self.omega > 0:
            raise ConfigError(f"sinr_gap must be > 0, got {self.omega}")
        if not (self.d_min > 0 and self.r_su > 0):
            raise ConfigError("d_min and r_su must be positive")
        return self


@dataclass
class NetworkTopology:
    area_side: float
    mbs_position: np.ndarray
    sbs_positions: np.ndarray   # (N, 2)
    mu_positions: np.ndarray    # (K, 2)
    su_positions: np.ndarray    # (N, 2), SU n attached to SBS n
    M: int

    @property
    def K(self):
        return int(self.mu_positions.shape[0])

    @property
    def N(self):
        return int(self.sbs_positions.shape[0])


@dataclass
class EffectiveGains:
    """Scalar gains feeding every SINR, indexed [receiver] or [transmitter, receiver]"""
    a_mu: np.ndarray          # (K,)
    a_bh: np.ndarray          # (N,)
    a_su: np.ndarray          # (N,)
    c_sbs_mu: np.ndarray      # (N, K)  SBS n -> MU k
    c_sbs_sbs: np.ndarray     # (N, N)  SBS n' -> SBS n receiver, zero diagonal
    c_sbs_su: np.ndarray      # (N, N)  SBS n' -> SU n, zero diagonal
    c_mbs_su_mu: np.ndarray   # (K, N)  MU stream k leaking into SU n
    c_mbs_su_bh: np.ndarray   # (N, N)  backhaul stream n' leaking into SU n

    @property
    def K(self):
        return int(self.a_mu.shape[0])

    @property
    def N(self):
        return int(self.a_bh.shape[0])


@dataclass
class ChannelRealization:
    topology: NetworkTopology
    beta_mu: np.ndarray
    beta_bh: np.ndarray
    beta_mbs_su: np.ndarray
    beta_su: np.ndarray
    beta_cross_sbs_mu: np.ndarray
    beta_cross_sbs_sbs: np.ndarray
    beta_cross_sbs_su: np.ndarray
    h_mbs: np.ndarray         # (K + 2N, M): MU rows, SBS backhaul rows, SU rows
    h_scalars: dict           # 'su', 'sbs_mu', 'sbs_sbs', 'sbs_su'
    W: np.ndarray             # (M, K + N)
    g_eff: EffectiveGains
    redraws: int = 0

    @property
    def K(self):
        return self.topology.K

    @property
    def N(self):
        return self.topology.N


# ==================== POWER AND RATES ====================

@dataclass
class PowerVector:
    p_mu: np.ndarray
    p_bh: np.ndarray
    p_sbs: np.ndarray

    @property
    def layout(self):
        return (len(self.p_mu), len(self.p_bh), len(self.p_sbs))

    def as_array(self):
        return np.concatenate([self.p_mu, self.p_bh, self.p_sbs]).astype(float)

    @classmethod
    def from_array(cls, values, layout):
        k, n_bh, n_s = layout
        values = np.asarray(values, dtype=float)
        if values.shape != (k + n_bh + n_s,):
            raise ConfigError(f"power array of shape {values.shape} does not match layout {layout}")
        return cls(values[:k].copy(), values[k:k + n_bh].copy(), values[k + n_bh:].copy())

    def to_log(self, p_floor=1e-10):
        return LogPowerVector(np.log(np.maximum(self.as_array(), p_floor)), self.layout)


@dataclass
class LogPowerVector:
    """Same layout as PowerVector, entries are ln(watts)"""
    values: np.ndarray
    layout: Tuple[int, int, int]


@dataclass
class RateTriple:
    r_mu: np.ndarray
    r_bh: np.ndarray
    r_su: np.ndarray
    total: float

    @classmethod
    def build(cls, r_mu, r_bh, r_su):
        total = float(np.sum(r_mu) + np.sum(r_su))
        return cls(np.asarray(r_mu, dtype=float), np.asarray(r_bh, dtype=float),
                   np.asarray(r_su, dtype=float), total)

    @property
    def mu_sum(self):
        return float(np.sum(self.r_mu))

    @property
    def su_sum(self):
        return float(np.sum(self.r_su))


@dataclass
class ConstraintReport:
    c1: np.ndarray   # R^b_n - R^s_n
    c2: float        # P^m_max - sum P^m - sum P^b
    c3: np.ndarray   # P^s_max - P^s_n
    c4: np.ndarray   # R^m_k - R_min
    c5: np.ndarray   # R^s_n - R_min
    tolerance: float
    feasible: bool

    @property
    def max_violation(self):
        residuals = np.concatenate([np.atleast_1d(self.c1), [self.c2], self.c3, self.c4, self.c5])
        if residuals.size == 0:
            return 0.0
        return float(max(0.0, -np.min(residuals)))


@dataclass
class LinkSystem:
    """
    Every rate in a scheme written as P[power_index] * gain / (interference . P + noise)

    couplings holds (backhaul_link, access_link) pairs for the capacity
    constraint, cap_groups holds (variable indices, cap watts, label) triples
    where the label is "c2" for MBS budgets and "c3" for SBS budgets.
    """
    layout: Tuple[int, int, int]
    power_index: np.ndarray
    gain: np.ndarray
    interference: np.ndarray
    noise: np.ndarray
    weight: np.ndarray
    floor: np.ndarray
    kind: np.ndarray
    couplings: List[Tuple[int, int]]
    cap_groups: List[Tuple[np.ndarray, float, str]]
    omega: float
    var_caps: np.ndarray
    # Throughput scale applied to reported rates (slot or band share)
    rate_scale: Optional[np.ndarray] = None
    # Links with power_index -1 transmit at this fixed power
    fixed_power: Optional[np.ndarray] = None
    # User each link belongs to within its kind (TDMA slots share a user)
    owner: Optional[np.ndarray] = None

    @property
    def n_vars(self):
        return int(sum(self.layout))

    @property
    def n_links(self):
        return int(self.gain.shape[0])

    def links_of(self, kind):
        return np.flatnonzero(self.kind == kind)

    def scale(self):
        if self.rate_scale is None:
            return np.ones(self.n_links)
        return self.rate_scale

    def signal_power(self, p):
        """Transmit power behind every link's desired signal; p may be (n,) or (G, n)"""
        p = np.asarray(p, dtype=float)
        own = self.power_index >= 0
        if p.shape[-1] == 0:
            return np.broadcast_to(self.fixed_power, p.shape[:-1] + (self.n_links,)).copy()
        values = p[..., np.maximum(self.power_index, 0)]
        if self.fixed_power is None:
            return values
        return np.where(own, values, self.fixed_power)

    def owners(self, kind):
        idx = self.links_of(kind)
        if self.owner is None:
            return idx, np.arange(idx.size)
        return idx, self.owner[idx]


# ==================== RELAXATION AND SOLVER ====================

@dataclass(frozen=True)
class RelaxationState:
    alpha: np.ndarray
    mu: np.ndarray
    anchor_z: np.ndarray


@dataclass(frozen=True)
class PowerLimits:
    p_mbs_max_w: float = dbm_to_watts(46.0)
    p_sbs_max_w: float = dbm_to_watts(20.0)
    r_min_mu: float = 2.0
    r_min_su: float = 2.0


@dataclass(frozen=True)
class Tolerances:
    eps_feas: float = 1e-8
    eps_kkt: float = 1e-6
    barrier_t0: float = 1.0
    barrier_growth: float = 10.0
    duality_gap: float = 1e-8
    max_newton_steps: int = 200
    max_stages: int = 12


@dataclass(frozen=True)
class SolverConfig:
    t1_max: int = 30
    t2_max: int = 50
    t3_max: int = 50
    eps1: float = 1e-4
    eps2: float = 1e-4
    eps3: float = 1e-4
    eps_active: float = 1e-3
    p_floor: float = 1e-10
    z0_floor: float = 1e-9
    # phase-I stops once every slackened constraint holds with this margin
    feasibility_margin: float = 1e-6
    limits: PowerLimits = field(default_factory=PowerLimits)
    tol: Tolerances = field(default_factory=Tolerances)

    def validate(self):
        if min(self.t1_max, self.t2_max, self.t3_max) < 1:
            raise ConfigError("iteration caps must be >= 1")
        if min(self.eps1, self.eps2, self.eps3, self.eps_active) <= 0:
            raise ConfigError("tolerances must be > 0")
        if self.limits.p_mbs_max_w <= 0 or self.limits.p_sbs_max_w <= 0:
            raise ConfigError("power caps must be > 0")
        return self


@dataclass
class KktReport:
    solution: np.ndarray
    objective_value: float
    max_primal_residual: float
    stationarity_residual: float
    iterations: int
    converged: bool


@dataclass
class TracePoint:
    phase: str          # 'phase1', 'inner', 'outer'
    outer: int
    inner: int
    relaxed_objective: float
    true_objective: float
    max_violation: float


@dataclass
class SolverReport:
    final_powers: Optional[PowerVector]
    final_rates: Optional[RateTriple]
    objective_trace: List[TracePoint]
    c1_activity: np.ndarray
    termination: Termination
    wall_time: float
    outer_iterations: int = 0
    inner_iterations: int = 0
    phase1_rounds: int = 0
    redraws: int = 0

    @property
    def feasibility_trace(self):
        return [(p.phase, p.outer, p.inner, p.max_violation) for p in self.objective_trace]

    @property
    def backhaul_power(self):
        if self.final_powers is None:
            return 0.0
        return float(np.sum(self.final_powers.p_bh))

    def inner_traces(self):
        """Group the inner CCCP objective values by outer iteration"""
        traces = {}
        for point in self.objective_trace:
            if point.phase == 'inner':
                traces.setdefault(point.outer, []).append(point.relaxed_objective)
        return traces


# ==================== HARNESS ====================

@dataclass
class ScenarioConfig:
    num_antennas: int = 128
    num_mus: int = 4
    num_sbs: int = 4
    area_side: float = 500.0
    fading: FadingParams = field(default_factory=FadingParams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep_axis: SweepAxis = SweepAxis.NONE
    sweep_values: List[float] = field(default_factory=lambda: [0.0])
    droppings: int = 100
    schemes: List[SchemeId] = field(default_factory=lambda: list(SchemeId))
    seed: int = 0
    output_dir: str = 'results'
    workers: int = 1
    record_timing: bool = False

    def validate(self):
        if self.num_mus < 1 or self.num_sbs < 0 or self.num_antennas < 1:
            raise ConfigError("need num_mus >= 1, num_sbs >= 0 and num_antennas >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.sweep_values:
            raise ConfigError("sweep_values must be nonempty")
        if self.droppings < 1:
            raise ConfigError("droppings must be >= 1")
        if not self.schemes:
            raise ConfigError("at least one scheme is required")
        self.fading.validate()
        self.solver.validate()
        return self


@dataclass
class ResultRow:
    scheme: str
    sweep_param: str
    sweep_value: float
    dropping: int
    total_se: float
    mu_se: float
    su_se: float
    backhaul_power_w: float
    iterations: int
    termination: str
    wall_time_ms: Optional[float] = None

    @property
    def key(self):
        return (self.scheme, self.sweep_value, self.dropping)

    @property
    def succeeded(self):
        return self.termination in (Termination.CONVERGED.value, Termination.ITERATION_CAP.value,
                                    Termination.STALLED.value)
