"""The J-function, biAWGN capacity and the Shannon limit.

``J(s)`` is the mutual information between a uniform bit and a consistent
Gaussian LLR with variance ``s**2`` (mean ``s**2 / 2``).  The table behind
:func:`J` and :func:`J_inv` is built once by adaptive quadrature and
interpolated in the ``log(1 - J)`` domain, which keeps relative accuracy
close to ``J = 1``.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy import integrate

SIGMA_MAX = 60.0
_GRID_STEP = 0.002
_GH_NODES = 256


def _one_minus_j_quad(s: float) -> float:
    """``1 - J(s)`` by adaptive quadrature (slow, used to build the table)."""
    if s == 0.0:
        return 1.0
    m = 0.5 * s * s

    def f(x):
        return math.exp(-((x - m) ** 2) / (2 * s * s)) * np.logaddexp(0.0, -x)

    lo, hi = m - 40 * s, m + 40 * s
    pts = [0.0] if lo < 0.0 < hi else None
    val, _ = integrate.quad(f, lo, hi, points=pts, limit=400, epsabs=0.0, epsrel=1e-12)
    return val / (math.sqrt(2 * math.pi) * s * math.log(2.0))


@functools.lru_cache(maxsize=1)
def _table():
    coarse = np.linspace(0.0, SIGMA_MAX, 1201)
    log_tail = np.array([math.log(_one_minus_j_quad(s)) for s in coarse])
    # the tail is smooth in sigma; refine with a cubic spline of the exact samples
    from scipy.interpolate import CubicSpline

    spline = CubicSpline(coarse, log_tail)
    sig = np.arange(0.0, SIGMA_MAX + _GRID_STEP / 2, _GRID_STEP)
    lt = spline(sig)
    lt[0] = 0.0
    lt = np.minimum.accumulate(lt)
    return sig, lt


def J(s):
    """Mutual information of a consistent Gaussian LLR with standard deviation ``s``."""
    sig, lt = _table()
    s = np.asarray(s, dtype=float)
    out = 1.0 - np.exp(np.interp(s, sig, lt))
    return out if out.ndim else float(out)


def J_inv(i):
    """Inverse of :func:`J`; saturates at ``SIGMA_MAX`` for ``i`` at or above the table's top."""
    sig, lt = _table()
    i = np.asarray(i, dtype=float)
    if np.any((i < 0.0) | (i > 1.0)):
        raise ValueError("mutual information must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        target = np.log1p(-i)
    # lt is decreasing; np.interp needs increasing abscissae
    out = np.interp(-target, -lt, sig)
    return out if out.ndim else float(out)


def jtable():
    """``(sigma_grid, log(1 - J))`` arrays, for compiled kernels that interpolate themselves."""
    return _table()


def es_n0_linear(es_n0_db: float) -> float:
    return 10.0 ** (es_n0_db / 10.0)


def noise_variance(es_n0_db: float) -> float:
    """Noise variance ``sigma^2`` for unit-energy BPSK at ``Es/N0 = 1 / (2 sigma^2)``."""
    return 1.0 / (2.0 * es_n0_linear(es_n0_db))


def channel_llr_sigma(es_n0_db: float) -> float:
    """Std. deviation of the channel LLR ``2y/sigma^2``, i.e. ``sqrt(8 Es/N0)``."""
    return math.sqrt(8.0 * es_n0_linear(es_n0_db))


@functools.lru_cache(maxsize=1)
def _gh():
    x, w = np.polynomial.hermite.hermgauss(_GH_NODES)
    return x, w / math.sqrt(math.pi)


def biawgn_capacity(es_n0_db: float) -> float:
    """Capacity (bits/use) of the binary-input AWGN channel, Gauss-Hermite quadrature."""
    s = channel_llr_sigma(es_n0_db)
    x, w = _gh()
    llr = 0.5 * s * s + s * math.sqrt(2.0) * x
    loss = float(np.dot(w, np.logaddexp(0.0, -llr))) / math.log(2.0)
    return min(1.0, max(0.0, 1.0 - loss))


def shannon_limit(rate: float, tol_db: float = 1e-4) -> float:
    """Smallest Es/N0 (dB) at which the biAWGN capacity reaches ``rate``."""
    if not 0.0 < rate < 1.0:
        raise ValueError(f"rate must lie in (0, 1), got {rate}")
    lo, hi = -60.0, 30.0
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if biawgn_capacity(mid) < rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
