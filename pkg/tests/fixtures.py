# -*- coding: utf-8 -*-
"""
Small scenarios and hand-built gains shared by the test modules.
"""

import os
import sys

parent_dir = os.path.split(os.path.abspath(os.path.dirname(__file__)))[0]
if parent_dir not in sys.path:
    sys.path.append(parent_dir)

import numpy as np

from channel_service import generate_realization
from models import EffectiveGains, FadingParams, PowerLimits, ScenarioConfig, SchemeId, SolverConfig

# QoS floors off: the capacity coupling alone always has a feasible point
NO_FLOORS = PowerLimits(r_min_mu=0.0, r_min_su=0.0)

FAST_SOLVER = SolverConfig(t1_max=10, t2_max=15, eps1=1e-5, eps2=1e-5, limits=NO_FLOORS)


def small_scenario(**overrides):
    """16 antennas, 2 MUs, 2 SBSs, floors off"""
    values = dict(
        num_antennas=16,
        num_mus=2,
        num_sbs=2,
        droppings=2,
        schemes=[SchemeId.FD_NO_MASSIVE_MIMO, SchemeId.WIRED_NO_MASSIVE_MIMO],
        solver=FAST_SOLVER,
        seed=7,
    )
    values.update(overrides)
    return ScenarioConfig(**values)


def small_channel(seed=3, **overrides):
    return generate_realization(small_scenario(**overrides), seed)


def toy_gains():
    """K=1, N=1 gains with round numbers"""
    return EffectiveGains(
        a_mu=np.array([1e-6]),
        a_bh=np.array([2e-6]),
        a_su=np.array([1e-5]),
        c_sbs_mu=np.array([[1e-8]]),
        c_sbs_sbs=np.array([[0.0]]),
        c_sbs_su=np.array([[0.0]]),
        c_mbs_su_mu=np.array([[1e-9]]),
        c_mbs_su_bh=np.array([[2e-9]]),
    )


def toy_params(**overrides):
    return FadingParams(**overrides)
