# -*- coding: utf-8 -*-
"""
Convex Engine - Log-barrier interior point method for concave maximization
Every function it handles is a ConcaveForm in the log-power variables
"""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from exceptions import InfeasibleStartError, NumericalBreakdownError
from models import KktReport, Tolerances

logger = logging.getLogger('ENGINE')

# Armijo slope fraction and step shrink factor of the backtracking search
ARMIJO_SLOPE = 0.25
STEP_SHRINK = 0.5
MIN_STEP = 1e-14
# Below this squared Newton decrement the full step is taken without the Armijo test
QUADRATIC_REGION = 1e-6
NEWTON_TOL = 1e-10


# ==================== CONCAVE FORMS ====================

class ConcaveForm:
    """
    f(x) = const + linear . x - sum_j w_j ln(sum_i C_ji e^{x_i} + d_j) - sum_i e_i e^{x_i}

    With w >= 0, C >= 0 and e >= 0 the function is concave in x. Rates in
    log-power variables, their affine majorants and normalized power budgets
    all fit this shape.
    """

    def __init__(self, n, const=0.0, linear=None, lse_weights=None, lse_coeffs=None,
                 lse_offsets=None, exp_coeffs=None):
        self.n = int(n)
        self.const = float(const)
        self.linear = np.zeros(self.n) if linear is None else np.asarray(linear, dtype=float).copy()
        self.lse_weights = np.zeros(0) if lse_weights is None else np.asarray(lse_weights, dtype=float).copy()
        self.lse_coeffs = (np.zeros((0, self.n)) if lse_coeffs is None
                           else np.atleast_2d(np.asarray(lse_coeffs, dtype=float)).copy())
        self.lse_offsets = (np.zeros(self.lse_weights.size) if lse_offsets is None
                            else np.asarray(lse_offsets, dtype=float).copy())
        self.exp_coeffs = np.zeros(self.n) if exp_coeffs is None else np.asarray(exp_coeffs, dtype=float).copy()

        if self.lse_coeffs.shape != (self.lse_weights.size, self.n):
            raise ValueError(f"lse_coeffs has shape {self.lse_coeffs.shape}, "
                             f"expected ({self.lse_weights.size}, {self.n})")
        if np.any(self.lse_weights < 0) or np.any(self.lse_coeffs < 0) or np.any(self.exp_coeffs < 0):
            raise ValueError("ConcaveForm needs nonnegative weights and coefficients")

    @classmethod
    def affine(cls, n, const=0.0, linear=None):
        return cls(n, const=const, linear=linear)

    @property
    def is_affine(self):
        return self.lse_weights.size == 0 and not np.any(self.exp_coeffs)

    # --- evaluation ---

    def _lse_parts(self, x):
        """Row log-sum-exps and the softmax weights q_ji = C_ji e^{x_i} / (sum + d_j)"""
        a = np.append(x, 0.0)
        b = np.hstack([self.lse_coeffs, self.lse_offsets[:, None]])
        lse = logsumexp(np.broadcast_to(a, b.shape), b=b, axis=1)
        q = self.lse_coeffs * np.exp(x[None, :] - lse[:, None])
        return lse, q

    def value(self, x):
        x = np.asarray(x, dtype=float)
        total = self.const + float(np.dot(self.linear, x))
        if self.lse_weights.size:
            lse, _ = self._lse_parts(x)
            total -= float(np.dot(self.lse_weights, lse))
        if np.any(self.exp_coeffs):
            total -= float(np.dot(self.exp_coeffs, np.exp(x)))
        return total

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        grad = self.linear.copy()
        if self.lse_weights.size:
            _, q = self._lse_parts(x)
            grad -= self.lse_weights @ q
        if np.any(self.exp_coeffs):
            grad -= self.exp_coeffs * np.exp(x)
        return grad

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        hess = np.zeros((self.n, self.n))
        if self.lse_weights.size:
            _, q = self._lse_parts(x)
            hess -= np.diag(self.lse_weights @ q)
            hess += q.T @ (self.lse_weights[:, None] * q)
        if np.any(self.exp_coeffs):
            hess -= np.diag(self.exp_coeffs * np.exp(x))
        return hess

    # --- algebra ---

    def __add__(self, other):
        if not isinstance(other, ConcaveForm):
            return ConcaveForm(self.n, self.const + float(other), self.linear, self.lse_weights,
                               self.lse_coeffs, self.lse_offsets, self.exp_coeffs)
        if other.n != self.n:
            raise ValueError(f"cannot add forms over {self.n} and {other.n} variables")
        return ConcaveForm(
            self.n,
            const=self.const + other.const,
            linear=self.linear + other.linear,
            lse_weights=np.concatenate([self.lse_weights, other.lse_weights]),
            lse_coeffs=np.vstack([self.lse_coeffs, other.lse_coeffs]),
            lse_offsets=np.concatenate([self.lse_offsets, other.lse_offsets]),
            exp_coeffs=self.exp_coeffs + other.exp_coeffs,
        )

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ConcaveForm):
            if not other.is_affine:
                raise ValueError("only affine forms can be subtracted from a concave form")
            return self + other.scaled(-1.0)
        return self + (-float(other))

    def scaled(self, factor):
        factor = float(factor)
        if factor < 0 and not self.is_affine:
            raise ValueError("a non-affine concave form can only be scaled by a nonnegative factor")
        return ConcaveForm(self.n, self.const * factor, self.linear * factor,
                           self.lse_weights * factor, self.lse_coeffs, self.lse_offsets,
                           self.exp_coeffs * factor)

    def linearize(self, anchor):
        """First-order Taylor form at anchor; a global majorant of this concave form"""
        anchor = np.asarray(anchor, dtype=float)
        grad = self.gradient(anchor)
        return ConcaveForm.affine(self.n, self.value(anchor) - float(np.dot(grad, anchor)), grad)

    def extended(self, extra=1, slack_coeff=0.0):
        """Same function over extra trailing variables; the first one enters as slack_coeff * s"""
        linear = np.concatenate([self.linear, np.zeros(extra)])
        if extra:
            linear[self.n] = slack_coeff
        return ConcaveForm(
            self.n + extra,
            const=self.const,
            linear=linear,
            lse_weights=self.lse_weights,
            lse_coeffs=np.hstack([self.lse_coeffs, np.zeros((self.lse_weights.size, extra))]),
            lse_offsets=self.lse_offsets,
            exp_coeffs=np.concatenate([self.exp_coeffs, np.zeros(extra)]),
        )


# ==================== SUBPROBLEM ====================

@dataclass
class ConvexSubproblem:
    """
    maximize objective(x) subject to g(x) >= 0 for every constraint form
    and lower < x < upper
    """
    objective: ConcaveForm
    linearized_c1: List[ConcaveForm] = field(default_factory=list)
    power_caps: List[ConcaveForm] = field(default_factory=list)
    rate_floors: List[ConcaveForm] = field(default_factory=list)
    lower: np.ndarray = None
    upper: np.ndarray = None

    @property
    def n(self):
        return self.objective.n

    def constraints(self):
        return self.linearized_c1 + self.power_caps + self.rate_floors

    def labels(self):
        return (['c1'] * len(self.linearized_c1) + ['cap'] * len(self.power_caps)
                + ['floor'] * len(self.rate_floors))

    def constraint_values(self, x):
        return np.array([g.value(x) for g in self.constraints()])

    def max_violation(self, x):
        values = self.constraint_values(x)
        return float(max(0.0, -values.min())) if values.size else 0.0


class _Barrier:
    """t * f(x) + sum log(g_i(x) + shift) + log barriers of the finite box bounds"""

    def __init__(self, problem, shift):
        self.problem = problem
        self.forms = problem.constraints()
        self.shift = shift
        n = problem.n
        self.lower = np.full(n, -np.inf) if problem.lower is None else np.asarray(problem.lower, dtype=float)
        self.upper = np.full(n, np.inf) if problem.upper is None else np.asarray(problem.upper, dtype=float)
        self.has_lower = np.isfinite(self.lower)
        self.has_upper = np.isfinite(self.upper)

    @property
    def m(self):
        return len(self.forms) + int(self.has_lower.sum()) + int(self.has_upper.sum())

    def slacks(self, x):
        """Constraint slacks, or None once x leaves the strict interior"""
        lo = x[self.has_lower] - self.lower[self.has_lower]
        hi = self.upper[self.has_upper] - x[self.has_upper]
        if np.any(lo <= 0) or np.any(hi <= 0):
            return None
        with np.errstate(over='ignore', invalid='ignore'):
            g = np.array([form.value(x) for form in self.forms]) + self.shift
        if not np.all(np.isfinite(g)) or np.any(g <= 0):
            return None
        return g, lo, hi

    def value(self, x, t, slacks):
        g, lo, hi = slacks
        return t * self.problem.objective.value(x) + np.sum(np.log(g)) + np.sum(np.log(lo)) + np.sum(np.log(hi))

    def derivatives(self, x, t, slacks):
        g, lo, hi = slacks
        objective = self.problem.objective
        grad = t * objective.gradient(x)
        hess = t * objective.hessian(x)
        for form, gi in zip(self.forms, g):
            dg = form.gradient(x)
            grad += dg / gi
            hess += form.hessian(x) / gi - np.outer(dg, dg) / gi ** 2
        grad[self.has_lower] += 1.0 / lo
        grad[self.has_upper] -= 1.0 / hi
        diag = np.zeros(x.size)
        diag[self.has_lower] -= 1.0 / lo ** 2
        diag[self.has_upper] -= 1.0 / hi ** 2
        hess += np.diag(diag)
        if not (np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
            raise NumericalBreakdownError("non-finite barrier derivatives")
        return grad, hess


def _newton_direction(grad, hess):
    """Solve (-H) d = grad with a Cholesky factor, shifting -H until it is positive definite"""
    A = -hess
    scale = max(1.0, float(np.abs(np.diag(A)).max())) if A.size else 1.0
    tau = 0.0
    for _ in range(60):
        try:
            factor = scipy.linalg.cho_factor(A + tau * np.eye(A.shape[0]), lower=True)
            return scipy.linalg.cho_solve(factor, grad)
        except (np.linalg.LinAlgError, ValueError):
            tau = max(2.0 * tau, 1e-12 * scale)
    raise NumericalBreakdownError("barrier Hessian could not be regularized")


def _start_shift(g0, tol):
    """Shift that keeps constraints violated by at most eps_feas inside the barrier domain"""
    if g0.size == 0:
        return 0.0
    worst = float(g0.min())
    if not np.isfinite(worst):
        raise NumericalBreakdownError("non-finite constraint value at the start point")
    if worst <= -tol.eps_feas:
        raise InfeasibleStartError(f"start point violates a constraint by {-worst:.3g}")
    return tol.eps_feas if worst <= 0 else 0.0


def solve(problem, start, tol=None, stop_when=None):
    """
    Maximize a concave objective over concave constraints with the barrier method

    Args:
        problem: ConvexSubproblem
        start: feasible start point (every constraint >= -eps_feas, strictly inside the box)
        tol: Tolerances
        stop_when: optional predicate on the iterate that ends the solve early

    Returns:
        KktReport; converged is False when the stage or Newton budget ran out

    Raises:
        InfeasibleStartError: start outside the feasible set
        NumericalBreakdownError: non-finite values during the iteration
    """
    tol = tol or Tolerances()
    x0 = np.asarray(start, dtype=float).copy()
    if not np.all(np.isfinite(x0)):
        raise NumericalBreakdownError("non-finite start point")

    g0 = problem.constraint_values(x0)
    shift = _start_shift(g0, tol)
    barrier = _Barrier(problem, shift)
    slacks = barrier.slacks(x0)
    if slacks is None:
        raise InfeasibleStartError("start point is not strictly inside the box")

    x = x0
    t = tol.barrier_t0
    iterations = 0
    gap_closed = False
    stopped = False

    for stage in range(tol.max_stages):
        for _ in range(tol.max_newton_steps):
            grad, hess = barrier.derivatives(x, t, slacks)
            direction = _newton_direction(grad, hess)
            decrement = float(np.dot(grad, direction))
            if decrement / 2.0 <= NEWTON_TOL:
                break

            current = barrier.value(x, t, slacks)
            step = 1.0
            accepted = None
            while step >= MIN_STEP:
                candidate = x + step * direction
                trial = barrier.slacks(candidate)
                if trial is not None:
                    if decrement < QUADRATIC_REGION:
                        accepted = (candidate, trial)
                        break
                    if barrier.value(candidate, t, trial) >= current + ARMIJO_SLOPE * step * decrement:
                        accepted = (candidate, trial)
                        break
                step *= STEP_SHRINK
            if accepted is None:
                break
            x, slacks = accepted
            iterations += 1
            if stop_when is not None and stop_when(x):
                stopped = True
                break

        if stopped:
            break
        if barrier.m / t < tol.duality_gap:
            gap_closed = True
            break
        t *= tol.barrier_growth

    objective_value = problem.objective.value(x)
    if not np.isfinite(objective_value):
        raise NumericalBreakdownError("non-finite objective at the solution")

    # Monotone guard: never hand back a point worse than a feasible start
    if shift == 0.0 and not stopped and objective_value < problem.objective.value(x0):
        logger.debug("Barrier solution below the start objective, keeping the start")
        x, slacks = x0, barrier.slacks(x0)
        objective_value = problem.objective.value(x0)

    grad, _ = barrier.derivatives(x, t, slacks)
    stationarity = float(np.abs(grad).max()) / t if grad.size else 0.0
    primal = problem.max_violation(x)
    converged = stopped or (gap_closed and primal <= tol.eps_feas and stationarity <= tol.eps_kkt)
    if not converged:
        logger.debug("Barrier stopped after %d Newton steps (gap closed: %s, stationarity %.3g)",
                     iterations, gap_closed, stationarity)

    return KktReport(
        solution=x,
        objective_value=objective_value,
        max_primal_residual=primal,
        stationarity_residual=stationarity,
        iterations=iterations,
        converged=converged,
    )


def solve_feasibility(problem, start, tol=None, margin=1e-6):
    """
    Phase-I: maximize a common slack s with g_i(x) - s >= 0 on the rate
    constraints (capacity coupling and QoS floors), power caps kept hard

    Returns as soon as s reaches margin.

    Args:
        problem: ConvexSubproblem whose objective is ignored
        start: start point strictly inside the box and the power caps
        tol: Tolerances
        margin: slack that counts as strictly feasible

    Returns:
        (KktReport over the original variables, achieved slack s)
    """
    tol = tol or Tolerances()
    x0 = np.asarray(start, dtype=float).copy()
    soft = problem.linearized_c1 + problem.rate_floors
    if not soft:
        report = KktReport(x0, 0.0, problem.max_violation(x0), 0.0, 0, True)
        return report, float('inf')

    g0 = np.array([form.value(x0) for form in soft])
    if not np.all(np.isfinite(g0)):
        raise NumericalBreakdownError("non-finite constraint value at the phase-I start")
    if g0.min() >= margin:
        return KktReport(x0, float(g0.min()), 0.0, 0.0, 0, True), float(g0.min())

    n = problem.n
    slack_problem = ConvexSubproblem(
        objective=ConcaveForm.affine(n + 1, linear=np.eye(n + 1)[n]),
        linearized_c1=[form.extended(1, -1.0) for form in problem.linearized_c1],
        power_caps=[form.extended(1) for form in problem.power_caps],
        rate_floors=[form.extended(1, -1.0) for form in problem.rate_floors],
        lower=None if problem.lower is None else np.append(problem.lower, -np.inf),
        upper=None if problem.upper is None else np.append(problem.upper, np.inf),
    )
    y0 = np.append(x0, g0.min() - 1.0)
    report = solve(slack_problem, y0, tol, stop_when=lambda y: y[-1] >= margin)

    x = report.solution[:n]
    achieved = float(min(form.value(x) for form in soft))
    result = KktReport(
        solution=x,
        objective_value=achieved,
        max_primal_residual=problem.max_violation(x),
        stationarity_residual=report.stationarity_residual,
        iterations=report.iterations,
        converged=report.converged,
    )
    return result, achieved
