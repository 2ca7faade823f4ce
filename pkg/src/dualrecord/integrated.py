"""Integrated-likelihood estimator of N for the time-behavioural model.

The nuisance probabilities are re-expressed through parameters that are
strongly unrelated to N, given beta-type priors, and integrated out. What
remains is a log-gamma ratio in N whose increasing region ends at the upper
root ``n0`` of a quadratic; the estimate is ``floor(n0) + 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .classic import lp_estimate, nour_estimate
from .exceptions import (DegenerateQuadratic, DegenerateTable, DomainError,
                         DualRecordError, HyperparamInfeasible, NoRealRoot)
from .tables import Direction, DualRecordTable, MtbParams

CONSTRAINT_TOL = 1e-9


@dataclass(frozen=True)
class Hyperparams:
    """Prior hyperparameters; ``r2 + s2 == s1`` keeps the likelihood closed form."""

    n_star: float
    b: float
    r2: float
    s1: float
    s2: float

    def __post_init__(self):
        if not self.b > 0:
            raise HyperparamInfeasible(f"b must be positive, got {self.b}")
        if not (self.s1 > 0 and self.s2 > 0):
            raise HyperparamInfeasible(f"s1, s2 must be positive, got s1={self.s1}, s2={self.s2}")
        if not self.r2 >= 0:
            raise HyperparamInfeasible(f"r2 must be non-negative, got {self.r2}")
        if abs(self.r2 + self.s2 - self.s1) > CONSTRAINT_TOL * max(1.0, abs(self.s1)):
            raise HyperparamInfeasible(
                f"r2 + s2 = {self.r2 + self.s2} differs from s1 = {self.s1}")


class UnrelatedParams(NamedTuple):
    gamma1: float
    gamma2: float
    gamma3: float


class Roots(NamedTuple):
    n0: float
    lower_root: float


class QuadCoefficients(NamedTuple):
    a: float
    b: float
    c: float


@dataclass(frozen=True)
class EstimateResult:
    point: int
    n0: float
    tie: bool
    hyper: Hyperparams
    direction: Direction
    lower_root: float = math.nan
    warnings: tuple[str, ...] = ()
    se: Optional[float] = None
    ci: Optional[tuple[float, float]] = None
    bootstrap_failures: Optional[int] = None

    @property
    def maximizers(self) -> tuple[int, ...]:
        return (self.point, self.point + 1) if self.tie else (self.point,)


class BootstrapResult(NamedTuple):
    se: float
    ci: tuple[float, float]
    failures: int
    estimates: np.ndarray


# -- nuisance reparameterisation -------------------------------------------

def unrelated_params(params: MtbParams, table: DualRecordTable) -> UnrelatedParams:
    """Map (p1dot, c, p) at a given N to the parameters unrelated to N.

    Uses the unrounded Lincoln-Petersen estimate as the MLE of N.
    """
    n_ind = lp_estimate(table).raw
    ratio = n_ind / params.N
    if ratio == params.p1dot:
        raise DomainError("p1dot equals N_ind / N: transform has a pole")
    gamma1 = params.N / n_ind * params.p1dot
    gamma3 = params.p * (1.0 - params.p1dot) / (ratio - params.p1dot)
    return UnrelatedParams(gamma1, params.c, gamma3)


def params_from_unrelated(N: int, gamma: UnrelatedParams, table: DualRecordTable) -> tuple[float, float, float]:
    """Inverse of :func:`unrelated_params`; returns ``(p1dot, c, p)``."""
    n_ind = lp_estimate(table).raw
    g1, g2, g3 = gamma
    if N / n_ind == g1:
        raise DomainError("gamma1 equals N / N_ind: transform has a pole")
    p1dot = n_ind / N * g1
    p = g3 * (1.0 - g1) / (N / n_ind - g1)
    return p1dot, g2, p


# -- hyperparameters ---------------------------------------------------------

def select_hyperparams(table: DualRecordTable, direction) -> Hyperparams:
    """Working estimate N* and scale b from the direction of dependence.

    prone:   N* = Nour,               b = 1
    averse:  N* = N_ind,              b = 1 / g
    unknown: N* = (Nour + N_ind) / 2, b = (1 + 1 / g) / 2
    with g = N_ind - (x0 + N_ind)/2 - 1. Both estimates enter unrounded.
    """
    direction = Direction.parse(direction)
    if table.x11 == 0:
        raise DegenerateTable("x11 = 0: independence estimator undefined")
    x0, x1 = table.x0, table.x1dot
    n_ind = lp_estimate(table).raw
    n_nour = nour_estimate(table)
    gap = n_ind - (x0 + n_ind) / 2.0 - 1.0
    if direction is Direction.PRONE:
        n_star, b = n_nour, 1.0
    else:
        if gap <= 0:
            raise HyperparamInfeasible(
                f"N_ind = {n_ind:.6g} must exceed x0 + 2 = {x0 + 2} for the {direction.value} policy")
        if direction is Direction.AVERSE:
            n_star, b = n_ind, 1.0 / gap
        else:
            n_star, b = (n_nour + n_ind) / 2.0, (1.0 + 1.0 / gap) / 2.0
    s2 = b * (n_star - x0)
    s1 = b * (n_star - x1)
    if s2 <= 0:
        raise HyperparamInfeasible(
            f"N* = {n_star:.6g} does not exceed x0 = {x0} (x10 or x01 is zero)")
    # r2 + s2 = s1 forces r2 = b * x01
    return Hyperparams(n_star=n_star, b=b, r2=s1 - s2, s1=s1, s2=s2)


def r1_of(N, s1: float, x1dot: int) -> float:
    """Shape of the gamma1 prior matched to its posterior mean at N."""
    if N <= x1dot:
        raise DomainError(f"N = {N} must exceed x1dot = {x1dot}")
    return x1dot * s1 / (N - x1dot)


# -- likelihood and its maximiser -------------------------------------------

def log_integrated_tb(N, table: DualRecordTable, hyper: Hyperparams,
                      r1: Optional[float] = None) -> float:
    """Log integrated likelihood at N.

    ``r1`` defaults to ``r1(N)``. Pass it explicitly to hold the prior shape
    fixed while comparing neighbouring N.
    """
    x0 = table.x0
    if N < x0:
        raise DomainError(f"N = {N} is below x0 = {x0}")
    if r1 is None:
        r1 = r1_of(N, hyper.s1, table.x1dot)
    elif N <= table.x1dot:
        raise DomainError(f"N = {N} must exceed x1dot = {table.x1dot}")
    return float(gammaln(N - x0 + hyper.s2) + gammaln(N + 1.0)
                 - gammaln(N + r1 + hyper.s1) - gammaln(N - x0 + 1.0))


def step_log_ratio(N, table: DualRecordTable, hyper: Hyperparams) -> float:
    """log L(N+1) - log L(N) with the prior shape frozen at r1(N)."""
    r1 = r1_of(N, hyper.s1, table.x1dot)
    return (log_integrated_tb(N + 1, table, hyper, r1=r1)
            - log_integrated_tb(N, table, hyper, r1=r1))


def quadratic_coefficients(table: DualRecordTable, hyper: Hyperparams) -> QuadCoefficients:
    """Coefficients of ``a N^2 + b N + c <= 0``, the region where L increases."""
    x1, x0, x01 = table.x1dot, table.x0, table.x01
    r2, s1 = hyper.r2, hyper.s1
    return QuadCoefficients(r2, -(x1 * r2 + x01 * s1 - r2 - x0), -x1 * (x0 + r2 - s1))


def n0_root(table: DualRecordTable, hyper: Hyperparams) -> Roots:
    n0, lower, status = _kernels._roots_scalar(
        float(table.x1dot), float(table.x0), hyper.s1, hyper.r2)
    if status == _kernels.DEGENERATE_QUADRATIC:
        raise DegenerateQuadratic("r2 = 0 and the linear boundary does not bound N from above")
    if status == _kernels.NO_REAL_ROOT:
        raise NoRealRoot("boundary quadratic has a negative discriminant")
    return Roots(n0, lower)


def estimate(table: DualRecordTable, direction) -> EstimateResult:
    """Integrated-likelihood point estimate of N."""
    direction = Direction.parse(direction)
    hyper = select_hyperparams(table, direction)
    n0, lower = n0_root(table, hyper)
    fl = math.floor(n0)
    tie = fl == n0
    point = int(fl) if tie else int(fl) + 1
    warnings = []
    if point < table.x0:
        warnings.append(f"upper root {n0:.6g} lies below x0; estimate clamped to x0")
        point, tie = table.x0, False
    if lower >= 0:
        warnings.append(f"lower root {lower:.6g} is non-negative")
    return EstimateResult(point=point, n0=n0, tie=tie, hyper=hyper, direction=direction,
                          lower_root=lower, warnings=tuple(warnings))


def tb_profile(table: DualRecordTable, hyper: Hyperparams, n_lo: int, n_hi: int) -> np.ndarray:
    """Step-accumulated log likelihood on N = n_lo..n_hi, zero at n_lo."""
    return _kernels.path_profile(float(table.x0), float(table.x1dot), hyper.s1, hyper.s2,
                                 int(n_lo), int(n_hi))


def grid_argmax_oracle(table: DualRecordTable, hyper: Hyperparams, n_max: int) -> int:
    """Brute-force maximiser of the step-accumulated likelihood.

    Walks every integer N from max(x0, x1dot + 1) to ``n_max`` evaluating
    log-gamma terms directly, never touching the quadratic.
    """
    if n_max <= table.x0:
        raise ValueError(f"n_max = {n_max} must exceed x0 = {table.x0}")
    n_lo = max(table.x0, table.x1dot + 1)
    prof = tb_profile(table, hyper, n_lo, n_max)
    return n_lo + int(np.argmax(prof))


# -- bootstrap ---------------------------------------------------------------

def bootstrap_ci(table: DualRecordTable, direction, reps: int = 1000, seed: int = 0,
                 level: float = 0.95) -> BootstrapResult:
    """Parametric bootstrap standard error and percentile interval.

    Tables are redrawn from the model fitted at the point estimate; replicate
    ``i`` uses its own stream derived from ``(seed, i)``. Replicates where the
    estimator fails are dropped and counted.
    """
    from .simulation import simulate_tables

    if reps < 100:
        raise ValueError(f"reps must be >= 100, got {reps}")
    direction = Direction.parse(direction)
    fit = estimate(table, direction)
    n_hat = fit.point
    p1dot = table.x1dot / n_hat
    c = table.x11 / table.x1dot
    p = table.x01 / (n_hat - table.x1dot)
    cells = simulate_tables(n_hat, p1dot, c, p, reps, seed=seed, label="bootstrap")
    point, _, status = _kernels.estimate_batch(*cells, direction.code)
    ok = status == _kernels.OK
    est = point[ok].astype(float)
    if est.size < 2:
        raise DualRecordError(f"only {est.size} of {reps} bootstrap replicates could be estimated")
    alpha = (1.0 - level) / 2.0
    lo, hi = np.percentile(est, [100 * alpha, 100 * (1 - alpha)])
    return BootstrapResult(float(np.std(est, ddof=1)), (float(lo), float(hi)),
                           int(reps - est.size), est)


def estimate_with_bootstrap(table: DualRecordTable, direction, reps: int, seed: int) -> EstimateResult:
    res = estimate(table, direction)
    boot = bootstrap_ci(table, direction, reps=reps, seed=seed)
    return EstimateResult(**{**res.__dict__, "se": boot.se, "ci": boot.ci,
                             "bootstrap_failures": boot.failures})
