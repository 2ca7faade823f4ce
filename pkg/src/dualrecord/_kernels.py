"""Hot numeric kernels with a numba path and a pure-numpy path.

Two kernels dominate runtime:

* ``estimate_batch`` evaluates the integrated-likelihood estimator on many
  tables at once (simulation study, bootstrap);
* ``path_profile`` accumulates the step log-likelihood on an integer grid of
  N (grid oracle, ``profile`` command).

Set ``DUALRECORD_NUMBA=0`` to force the numpy path. When numba is missing
the numpy path is used silently. Both paths perform the same floating point
operations in the same order, so ``estimate_batch`` agrees bit for bit.
"""
from __future__ import annotations

import math
import os

import numpy as np
from scipy.special import gammaln

# status codes returned by estimate_batch
OK = 0
DEGENERATE_TABLE = 1
HYPER_INFEASIBLE = 2
DEGENERATE_QUADRATIC = 3
NO_REAL_ROOT = 4

PRONE, AVERSE, UNKNOWN = 0, 1, 2

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

NUMBA_AVAILABLE = numba is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and os.environ.get("DUALRECORD_NUMBA", "1").strip().lower() not in (
    "0", "false", "no", "off")


# -- shared scalar pieces ------------------------------------------------------
# Written once in plain Python; jitted below when numba is on.

def _hyper_scalar(x11, x10, x01, code):
    """Return (n_star, b, s1, s2, r2, status) for one table."""
    x1 = x11 + x10
    xd1 = x11 + x01
    x0 = x1 + x01
    if x11 <= 0.0:
        return math.nan, math.nan, math.nan, math.nan, math.nan, DEGENERATE_TABLE
    nind = x1 * xd1 / x11
    nour_den = x11 * x11 + x10 * x01
    nour = x0 + 2.0 * x11 * x10 * x01 / nour_den
    gap = nind - (x0 + nind) / 2.0 - 1.0
    if code == PRONE:
        n_star = nour
        b = 1.0
    else:
        if gap <= 0.0:
            return math.nan, math.nan, math.nan, math.nan, math.nan, HYPER_INFEASIBLE
        if code == AVERSE:
            n_star = nind
            b = 1.0 / gap
        else:
            n_star = (nour + nind) / 2.0
            b = (1.0 + 1.0 / gap) / 2.0
    s2 = b * (n_star - x0)
    s1 = b * (n_star - x1)
    r2 = s1 - s2
    if s2 <= 0.0 or s1 <= 0.0:
        return n_star, b, s1, s2, r2, HYPER_INFEASIBLE
    return n_star, b, s1, s2, r2, OK


def _roots_scalar(x1, x0, s1, r2):
    """Return (upper, lower, status) of the boundary quadratic.

    The inequality ``a N^2 + bq N + cq <= 0`` holds between the roots. The
    larger-magnitude root is formed first to avoid cancellation.
    """
    a = r2
    bq = -(x1 * r2 + (x0 - x1) * s1 - r2 - x0)
    cq = -x1 * (x0 + r2 - s1)
    if a == 0.0:
        if bq > 0.0:
            return -cq / bq, -math.inf, OK
        return math.nan, math.nan, DEGENERATE_QUADRATIC
    disc = bq * bq - 4.0 * a * cq
    if disc < 0.0:
        return math.nan, math.nan, NO_REAL_ROOT
    q = -0.5 * (bq + math.copysign(math.sqrt(disc), bq))
    if q == 0.0:
        return 0.0, 0.0, OK
    ra = q / a
    rb = cq / q
    if ra >= rb:
        return ra, rb, OK
    return rb, ra, OK


def _point_scalar(n0, x0):
    """Integer estimate from the upper root; ties report the lower maximiser."""
    fl = np.floor(n0)
    if fl == n0:
        point = fl
    else:
        point = fl + 1.0
    lo = np.ceil(x0)
    if point < lo:
        point = lo
    return point


def _path_profile_loop(x0, x1, s1, s2, n_lo, out):
    # out[k] = sum_{j<k} [logL(N_j + 1; r1(N_j)) - logL(N_j; r1(N_j))], N_j = n_lo + j
    acc = 0.0
    out[0] = 0.0
    base_prev = (math.lgamma(n_lo - x0 + s2) + math.lgamma(n_lo + 1.0)
                 - math.lgamma(n_lo - x0 + 1.0))
    for k in range(1, out.shape[0]):
        N = n_lo + k - 1.0
        base_next = (math.lgamma(N + 1.0 - x0 + s2) + math.lgamma(N + 2.0)
                     - math.lgamma(N + 2.0 - x0))
        r1 = x1 * s1 / (N - x1)
        acc += (base_next - base_prev
                - math.lgamma(N + 1.0 + r1 + s1) + math.lgamma(N + r1 + s1))
        out[k] = acc
        base_prev = base_next


# -- numpy path ----------------------------------------------------------------

def estimate_batch_numpy(x11, x10, x01, code):
    """Vectorised estimator; returns ``(point, n0, status)`` arrays."""
    x11 = np.asarray(x11, dtype=np.float64)
    x10 = np.asarray(x10, dtype=np.float64)
    x01 = np.asarray(x01, dtype=np.float64)
    n = x11.shape[0]
    status = np.zeros(n, dtype=np.int8)

    x1 = x11 + x10
    xd1 = x11 + x01
    x0 = x1 + x01
    with np.errstate(divide="ignore", invalid="ignore"):
        nind = x1 * xd1 / x11
        nour = x0 + 2.0 * x11 * x10 * x01 / (x11 * x11 + x10 * x01)
        gap = nind - (x0 + nind) / 2.0 - 1.0
        if code == PRONE:
            n_star = nour
            b = np.ones(n)
        elif code == AVERSE:
            n_star = nind
            b = 1.0 / gap
        else:
            n_star = (nour + nind) / 2.0
            b = (1.0 + 1.0 / gap) / 2.0
        s2 = b * (n_star - x0)
        s1 = b * (n_star - x1)
        r2 = s1 - s2

        bad_hyper = ~((s2 > 0.0) & (s1 > 0.0))
        if code != PRONE:
            bad_hyper |= ~(gap > 0.0)
        status[bad_hyper] = HYPER_INFEASIBLE
        status[~(x11 > 0.0)] = DEGENERATE_TABLE

        a = r2
        bq = -(x1 * r2 + (x0 - x1) * s1 - r2 - x0)
        cq = -x1 * (x0 + r2 - s1)
        disc = bq * bq - 4.0 * a * cq
        q = -0.5 * (bq + np.copysign(np.sqrt(disc), bq))
        ra = q / a
        rb = np.where(q == 0.0, 0.0, cq / q)
        ra = np.where(q == 0.0, 0.0, ra)
        upper = np.maximum(ra, rb)

        linear = a == 0.0
        lin_ok = linear & (bq > 0.0)
        upper = np.where(lin_ok, -cq / bq, upper)

    ok = status == OK
    status[ok & linear & ~lin_ok] = DEGENERATE_QUADRATIC
    status[ok & ~linear & (disc < 0.0)] = NO_REAL_ROOT
    ok = status == OK

    n0 = np.where(ok, upper, np.nan)
    fl = np.floor(np.where(ok, n0, 0.0))
    pt = np.where(fl == n0, fl, fl + 1.0)
    pt = np.maximum(pt, np.ceil(x0))
    point = np.where(ok, pt, -1.0).astype(np.int64)
    return point, n0, status


def path_profile_numpy(x0, x1, s1, s2, n_lo, n_hi):
    N = np.arange(n_lo, n_hi, dtype=np.float64)
    out = np.zeros(n_hi - n_lo + 1)
    if N.size == 0:
        return out
    r1 = x1 * s1 / (N - x1)
    grid = np.arange(n_lo, n_hi + 1, dtype=np.float64)
    base = gammaln(grid - x0 + s2) + gammaln(grid + 1.0) - gammaln(grid - x0 + 1.0)
    step = (base[1:] - base[:-1]
            - gammaln(N + 1.0 + r1 + s1) + gammaln(N + r1 + s1))
    out[1:] = np.cumsum(step)
    return out


# -- numba path ----------------------------------------------------------------

if NUMBA_AVAILABLE:
    _jit = numba.njit(cache=True)
    _hyper_nb = _jit(_hyper_scalar)
    _roots_nb = _jit(_roots_scalar)
    _point_nb = _jit(_point_scalar)

    @numba.njit(cache=True)
    def _estimate_scalar_nb(x11, x10, x01, code):
        n_star, b, s1, s2, r2, status = _hyper_nb(x11, x10, x01, code)
        if status != OK:
            return -1.0, math.nan, status
        x1 = x11 + x10
        x0 = x1 + x01
        n0, lower, status = _roots_nb(x1, x0, s1, r2)
        if status != OK:
            return -1.0, math.nan, status
        return _point_nb(n0, x0), n0, OK

    @numba.njit(cache=True)
    def _estimate_batch_nb(x11, x10, x01, code, point, n0, status):
        for i in range(x11.shape[0]):
            pt, root, st = _estimate_scalar_nb(x11[i], x10[i], x01[i], code)
            point[i] = np.int64(pt)
            n0[i] = root
            status[i] = st

    _path_profile_nb = _jit(_path_profile_loop)

    def estimate_batch_numba(x11, x10, x01, code):
        x11 = np.ascontiguousarray(x11, dtype=np.float64)
        x10 = np.ascontiguousarray(x10, dtype=np.float64)
        x01 = np.ascontiguousarray(x01, dtype=np.float64)
        n = x11.shape[0]
        point = np.empty(n, dtype=np.int64)
        n0 = np.empty(n, dtype=np.float64)
        status = np.empty(n, dtype=np.int8)
        _estimate_batch_nb(x11, x10, x01, int(code), point, n0, status)
        return point, n0, status

    def path_profile_numba(x0, x1, s1, s2, n_lo, n_hi):
        out = np.empty(n_hi - n_lo + 1)
        _path_profile_nb(float(x0), float(x1), float(s1), float(s2), float(n_lo), out)
        return out
else:  # pragma: no cover
    estimate_batch_numba = None
    path_profile_numba = None


def estimate_batch(x11, x10, x01, code):
    """Estimate N for every table in the batch.

    Returns ``(point, n0, status)``: integer estimates (-1 on failure), upper
    roots (nan on failure) and status codes (0 = ok).
    """
    if NUMBA_ENABLED:
        return estimate_batch_numba(x11, x10, x01, code)
    return estimate_batch_numpy(x11, x10, x01, code)


def path_profile(x0, x1, s1, s2, n_lo, n_hi):
    """Cumulative step log-likelihood on ``N = n_lo .. n_hi`` (0 at ``n_lo``).

    Each step ``N -> N+1`` evaluates both log-gamma expressions with the
    prior shape ``r1`` frozen at ``r1(N)``.
    """
    if n_hi < n_lo:
        raise ValueError(f"empty grid [{n_lo}, {n_hi}]")
    if n_lo <= x1:
        raise ValueError("grid must start above x1dot so r1(N) is finite")
    if n_lo < x0:
        raise ValueError(f"grid must start at or above x0 = {x0}")
    if NUMBA_ENABLED:
        return path_profile_numba(x0, x1, s1, s2, n_lo, n_hi)
    return path_profile_numpy(x0, x1, s1, s2, n_lo, n_hi)


def backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
