"""Closed-form baseline estimators and likelihood evaluators.

All likelihoods are on the log scale; the falling factorial N!/(N-x0)! goes
through ``gammaln`` so N can reach census scale without overflow.
"""
from __future__ import annotations

import math
from typing import NamedTuple

from scipy.special import gammaln, xlog1py, xlogy

from .exceptions import DegenerateTable, DomainError
from .tables import DualRecordTable, MtbParams, PhiParams


class LPEstimate(NamedTuple):
    point: int
    raw: float


def lp_estimate(table: DualRecordTable) -> LPEstimate:
    """Lincoln-Petersen (dual system) estimate x1. * x.1 / x11.

    ``raw`` is the unrounded ratio, ``point`` its floor.
    """
    if table.x11 == 0:
        raise DegenerateTable("x11 = 0: independence estimator undefined")
    raw = table.x1dot * table.xdot1 / table.x11
    return LPEstimate(table.x1dot * table.xdot1 // table.x11, raw)


def nour_estimate(table: DualRecordTable) -> float:
    """Nour's estimator for positively dependent lists."""
    x11, x10, x01 = table.as_tuple()
    den = x11 * x11 + x10 * x01
    if den == 0:
        raise DegenerateTable("x11^2 + x10*x01 = 0: Nour estimator undefined")
    return table.x0 + 2.0 * x11 * x10 * x01 / den


def _log_falling(N: float, x0: int) -> float:
    # log N!/(N-x0)!
    return gammaln(N + 1.0) - gammaln(N - x0 + 1.0)


def log_lik_mtb_values(N: int, p1dot: float, c: float, p: float,
                       table: DualRecordTable) -> float:
    """Log-likelihood of the time-behavioural model, up to an additive constant.

    Probabilities may sit on the boundary [0, 1]; the result is then ``-inf``
    whenever the data are impossible.
    """
    x11, x10, x01 = table.as_tuple()
    x1, x0 = table.x1dot, table.x0
    if N < x0:
        raise DomainError(f"N = {N} is below the number of distinct captures x0 = {x0}")
    return float(
        _log_falling(N, x0)
        + xlogy(x11, c) + xlog1py(x10, -c)
        + xlogy(x1, p1dot) + xlog1py(N - x1, -p1dot)
        + xlogy(x01, p) + xlog1py(N - x0, -p)
    )


def log_lik_mtb(params: MtbParams, table: DualRecordTable) -> float:
    return log_lik_mtb_values(params.N, params.p1dot, params.c, params.p, table)


def log_lik_phi(params: PhiParams, table: DualRecordTable) -> float:
    """Log-likelihood in the (N, p1dot, p, phi) parameterisation.

    Evaluated from its own closed form (phi^x11 p^x.1 (1 - phi p)^x10) so it
    can be cross-checked against :func:`log_lik_mtb` with ``c = phi * p``.
    """
    N, p1, p, phi = params.N, params.p1dot, params.p, params.phi
    if phi * p >= 1.0:
        raise DomainError(f"phi * p = {phi * p} must be < 1")
    x1, xd1, x0 = table.x1dot, table.xdot1, table.x0
    if N < x0:
        raise DomainError(f"N = {N} is below the number of distinct captures x0 = {x0}")
    return float(
        _log_falling(N, x0)
        + xlogy(table.x11, phi)
        + xlogy(x1, p1) + xlog1py(N - x1, -p1)
        + xlogy(xd1, p) + xlog1py(N - x0, -p)
        + xlog1py(table.x10, -phi * p)
    )


def log_integrated_uniform(N: int, table: DualRecordTable) -> float:
    """Integrated likelihood under a flat weight on (p1dot, c, p).

    Strictly decreasing in N, so it never yields an interior maximum.
    """
    if N <= table.x0:
        raise DomainError(f"N must exceed x0 = {table.x0}, got {N}")
    return -math.log(N + 1) - math.log(N - table.x1dot + 1)


def log_integrated_jeffreys(N: int, table: DualRecordTable) -> float:
    """Integrated likelihood under the Jeffreys weight {c(1-c)p(1-p)}^-1."""
    if N <= table.x0:
        raise DomainError(f"N must exceed x0 = {table.x0}, got {N}")
    return math.log(N - table.x1dot) - math.log(N + 1) - math.log(N - table.x0)
