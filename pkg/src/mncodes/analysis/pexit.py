"""Protograph EXIT analysis for MacKay-Neal ensembles.

All mutual-information values are carried as J-function arguments
(Gaussian-equivalent standard deviations) so that values very close to one
keep their precision.  Punctured types see the BSC prior through a Gaussian
surrogate with ``J(sigma) = 1 - H_b(omega)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ..protograph import BaseMatrix
from ..ratemath import binary_entropy, omega_for_rate
from . import jfunc

BRACKET_DB = (-20.0, 10.0)


@njit(cache=True)
def _lt(s, sig, lt):
    return np.interp(s, sig, lt)


@njit(cache=True)
def _lt_inv(y, sig, lt):
    # lt decreasing in sig; search on the negated table
    n = lt.shape[0]
    if y >= lt[0]:
        return 0.0
    if y <= lt[n - 1]:
        return sig[n - 1]
    lo, hi = 0, n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if lt[mid] > y:
            lo = mid
        else:
            hi = mid
    t = (y - lt[lo]) / (lt[hi] - lt[lo])
    return sig[lo] + t * (sig[hi] - sig[lo])


@njit(cache=True)
def _dual(s, sig, lt):
    """Map ``s`` to ``J^-1(1 - J(s))`` without forming ``1 - J`` explicitly."""
    tail = math.exp(_lt(s, sig, lt))
    if tail >= 1.0:
        return sig[sig.shape[0] - 1]
    return _lt_inv(math.log1p(-tail), sig, lt)


@njit(cache=True, nogil=True)
def _pexit_kernel(rows, cols, mult, m0, ntot, sch2, max_iter, log_eps, sig, lt, traj):
    ne = rows.shape[0]
    a = np.zeros(ne)  # J^-1 of CN->VN MI per edge type
    c = np.zeros(ne)  # J^-1(1 - I_ev) per edge type
    vsum = np.zeros(ntot)
    csum = np.zeros(m0)
    app = np.zeros(ntot)
    record = traj.shape[0] > 0
    for it in range(max_iter):
        for j in range(ntot):
            vsum[j] = sch2[j]
        for e in range(ne):
            vsum[cols[e]] += mult[e] * a[e] * a[e]
        for j in range(ntot):
            app[j] = math.sqrt(vsum[j])
        if record and it < traj.shape[0]:
            for j in range(ntot):
                traj[it, j] = app[j]
        done = True
        for j in range(ntot):
            if _lt(app[j], sig, lt) > log_eps:
                done = False
                break
        if done:
            return True, it
        for e in range(ne):
            sv = math.sqrt(max(vsum[cols[e]] - a[e] * a[e], 0.0))
            c[e] = _dual(sv, sig, lt)
        for i in range(m0):
            csum[i] = 0.0
        for e in range(ne):
            csum[rows[e]] += mult[e] * c[e] * c[e]
        stalled = True
        for e in range(ne):
            sc = math.sqrt(max(csum[rows[e]] - c[e] * c[e], 0.0))
            new = _dual(sc, sig, lt)
            if abs(new - a[e]) > 1e-12:
                stalled = False
            a[e] = new
        if stalled:
            return False, it
    return False, max_iter


def _edges(base: BaseMatrix):
    rows, cols = np.nonzero(base.entries)
    mult = base.entries[rows, cols].astype(np.float64)
    return rows.astype(np.int64), cols.astype(np.int64), mult


def _channel_sigma2(base: BaseMatrix, omega: float, es_n0_db: float) -> np.ndarray:
    prior = float(jfunc.J_inv(1.0 - binary_entropy(omega)))
    sch2 = np.full(base.n0_total, 8.0 * jfunc.es_n0_linear(es_n0_db))
    sch2[: base.h0] = prior * prior
    return sch2


@dataclass
class PexitRun:
    converged: bool
    iterations: int
    app_mi: np.ndarray = field(repr=False)


def pexit_run(base: BaseMatrix, omega: float, es_n0_db: float, max_iter: int = 2000,
              eps: float = 1e-6, record: bool = False) -> PexitRun:
    """Run the recursion; with ``record`` the per-iteration APP MI of every type is kept."""
    if not 0.0 < omega <= 0.5:
        raise ValueError(f"omega must lie in (0, 0.5], got {omega}")
    sig, lt = jfunc.jtable()
    rows, cols, mult = _edges(base)
    traj = np.zeros((max_iter + 1 if record else 0, base.n0_total))
    ok, it = _pexit_kernel(rows, cols, mult, base.m0, base.n0_total,
                           _channel_sigma2(base, omega, es_n0_db), max_iter,
                           math.log(eps), sig, lt, traj)
    app = jfunc.J(traj[: it + 1]) if record else np.empty((0, base.n0_total))
    return PexitRun(bool(ok), int(it), app)


def pexit_converges(base: BaseMatrix, omega: float, es_n0_db: float,
                    max_iter: int = 2000, eps: float = 1e-6) -> bool:
    """True iff every APP mutual information reaches ``1 - eps`` within ``max_iter``."""
    return pexit_run(base, omega, es_n0_db, max_iter, eps).converged


@dataclass
class ThresholdResult:
    gamma_star: float
    rate: float | None
    omega: float
    converged_grid: list = field(default_factory=list, repr=False)


class NoConvergenceError(RuntimeError):
    pass


def bisect_threshold(converges, omega, rate=None, bracket=BRACKET_DB, tol_db=0.01):
    """Bisection on Es/N0 for a monotone ``converges(snr_db)`` predicate."""
    lo, hi = bracket
    trace = []
    ok_hi = converges(hi)
    trace.append((hi, ok_hi))
    if not ok_hi:
        raise NoConvergenceError(f"no convergence in bracket even at {hi} dB")
    ok_lo = converges(lo)
    trace.append((lo, ok_lo))
    if ok_lo:
        return ThresholdResult(lo, rate, omega, trace)
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        ok = converges(mid)
        trace.append((mid, ok))
        if ok:
            hi = mid
        else:
            lo = mid
    return ThresholdResult(hi, rate, omega, trace)


def pexit_threshold(base: BaseMatrix, omega: float, rate: float | None = None,
                    tol_db: float = 0.01, max_iter: int = 2000, eps: float = 1e-6) -> ThresholdResult:
    """Smallest Es/N0 (dB, to ``tol_db``) at which the PEXIT recursion converges."""
    return bisect_threshold(lambda g: pexit_converges(base, omega, g, max_iter, eps),
                            omega, rate, tol_db=tol_db)


def pexit_threshold_for_rate(base: BaseMatrix, rate: float, **kw) -> ThresholdResult:
    omega = omega_for_rate(rate, float(base.inner_rate))
    return pexit_threshold(base, omega, rate, **kw)
