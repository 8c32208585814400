# -*- coding: utf-8 -*-
"""
Error types raised by the channel, solver and harness services
"""


class SimulationError(Exception):
    """Base class for every error raised by this project"""


class ConfigError(SimulationError):
    """Invalid scenario, solver or CLI configuration"""


class SingularChannelError(SimulationError):
    """The stacked ZF group channel is rank deficient; the caller redraws fading"""


class NumericalBreakdownError(SimulationError):
    """A non-finite value showed up inside the convex engine"""


class InfeasibleStartError(SimulationError):
    """A convex solve was started outside its feasible set"""


class InfeasibleProblemError(SimulationError):
    """Phase-I could not find a point satisfying all constraints"""

    def __init__(self, message, slack=None, rounds=0):
        super().__init__(message)
        self.slack = slack
        self.rounds = rounds


class NoFeasibleGridPointError(SimulationError):
    """Brute force search found no grid point meeting the constraints"""


class GridTooLargeError(SimulationError):
    """Brute force grid exceeds the allowed number of points"""


class OutputError(SimulationError):
    """Output directory cannot be created or written"""
