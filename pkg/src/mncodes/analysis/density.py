"""Quantized density evolution over protograph MacKay-Neal ensembles.

Messages are pmfs on the uniform LLR grid ``k * bin_width`` for
``|k| <= K``; the two end bins absorb everything beyond the range.  Variable
nodes add LLRs, so their update is an exact convolution (FFT) followed by
folding the tails into the end bins.  Check nodes apply the quantized
pairwise tanh rule from a precomputed table, combined over a row with
prefix/suffix products.  No symmetry of the densities is assumed.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import fft as sfft
from scipy.special import ndtr

from ..protograph import BaseMatrix
from ..ratemath import omega_for_rate, prior_llr
from . import jfunc
from .pexit import BRACKET_DB, ThresholdResult, bisect_threshold, pexit_threshold

DEFAULT_BIN_WIDTH = 0.04
DEFAULT_RANGE = 30.0
MASS_TOL = 1e-9


@dataclass(frozen=True)
class QuantizedDensity:
    """A message pmf on the grid ``(-K..K) * bin_width``; end bins hold saturated mass."""

    pmf: np.ndarray
    bin_width: float

    @property
    def K(self) -> int:
        return (self.pmf.size - 1) // 2

    @property
    def llr_range(self) -> float:
        return self.K * self.bin_width

    @property
    def values(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1) * self.bin_width

    def mass(self) -> float:
        return float(self.pmf.sum())

    def error_probability(self) -> float:
        return _error_probability(self.pmf)


def _error_probability(p: np.ndarray) -> float:
    K = (p.size - 1) // 2
    return float(p[:K].sum() + 0.5 * p[K])


@functools.lru_cache(maxsize=8)
def _tanh_table(K: int, bin_width: float):
    """Band of the quantized pairwise check rule on magnitudes.

    ``table[i, d]`` is the output magnitude bin for inputs ``i`` and ``i + d``
    (``0 <= d <= width``).  Beyond the band the output bin equals ``i``.
    """
    width = int(math.ceil(math.log(2.0 / bin_width) / bin_width)) + 2
    i = np.arange(K + 1)[:, None]
    d = np.arange(width + 1)[None, :]
    j = np.minimum(i + d, K)
    a, b = i * bin_width, j * bin_width
    # stable form of 2 atanh(tanh(a/2) tanh(b/2)) for a <= b
    out = (a + np.log1p(np.exp(-(a + b))) - np.log1p(np.exp(-(b - a)))) / bin_width
    table = np.minimum(np.floor(out + 0.5), i).astype(np.int32)
    table[0, :] = 0
    inner = np.arange(1, K + 1 - width)
    if not np.all(table[inner, -1] == inner):
        raise AssertionError("check-rule band too narrow for this bin width")
    return table


@njit(cache=True)
def _cn_pair(p, q, table):
    K = (p.shape[0] - 1) // 2
    W = table.shape[1] - 1
    out = np.zeros_like(p)
    mp = p.sum()
    mq = q.sum()
    out[K] = p[K] * mq + (mp - p[K]) * q[K]
    # suffix sums of signed magnitudes, index by magnitude 1..K (K+1 is empty)
    sqp = np.zeros(K + 2)
    sqn = np.zeros(K + 2)
    spp = np.zeros(K + 2)
    spn = np.zeros(K + 2)
    for m in range(K, 0, -1):
        sqp[m] = sqp[m + 1] + q[K + m]
        sqn[m] = sqn[m + 1] + q[K - m]
        spp[m] = spp[m + 1] + p[K + m]
        spn[m] = spn[m + 1] + p[K - m]
    for i in range(1, K + 1):
        pp = p[K + i]
        pn = p[K - i]
        qp = q[K + i]
        qn = q[K - i]
        # equal magnitudes
        m = table[i, 0]
        same = pp * qp + pn * qn
        diff = pp * qn + pn * qp
        out[K + m] += same
        out[K - m] += diff
        top = min(i + W, K)
        for j in range(i + 1, top + 1):
            m = table[i, j - i]
            # smaller magnitude i from p, larger j from q, and the mirror
            a_same = pp * q[K + j] + pn * q[K - j] + qp * p[K + j] + qn * p[K - j]
            a_diff = pp * q[K - j] + pn * q[K + j] + qp * p[K - j] + qn * p[K + j]
            out[K + m] += a_same
            out[K - m] += a_diff
        if top < K:
            s = top + 1
            out[K + i] += pp * sqp[s] + pn * sqn[s] + qp * spp[s] + qn * spn[s]
            out[K - i] += pp * sqn[s] + pn * sqp[s] + qp * spn[s] + qn * spp[s]
    return out


def cn_combine(densities: list[np.ndarray], bin_width: float) -> np.ndarray:
    """Quantized tanh-rule combination of independent check-node inputs."""
    K = (densities[0].size - 1) // 2
    table = _tanh_table(K, bin_width)
    acc = densities[0]
    for d in densities[1:]:
        acc = _cn_pair(acc, d, table)
    return acc


def _fold(full: np.ndarray, count: int, K: int) -> np.ndarray:
    """Clip a linear convolution of ``count`` grid pmfs back onto ``-K..K``."""
    centre = count * K
    out = full[centre - K : centre + K + 1].copy()
    out[0] += full[: centre - K].sum()
    out[-1] += full[centre + K + 1 :].sum()
    return out


def _clean(p: np.ndarray) -> np.ndarray:
    np.maximum(p, 0.0, out=p)
    return p


def vn_combine(densities: list[np.ndarray]) -> np.ndarray:
    """Distribution of the saturated sum of independent LLRs."""
    K = (densities[0].size - 1) // 2
    if len(densities) == 1:
        return densities[0].copy()
    n = len(densities) * 2 * K + 1
    size = sfft.next_fast_len(n, real=True)
    spec = np.ones(size // 2 + 1, dtype=complex)
    for d in densities:
        spec *= sfft.rfft(d, size)
    full = sfft.irfft(spec, size)[:n]
    out = _clean(_fold(full, len(densities), K))
    # clipping FFT round-off below zero must not change the total mass
    out *= math.prod(float(d.sum()) for d in densities) / out.sum()
    return out


def _renormalize(p: np.ndarray, where: str) -> np.ndarray:
    # round-off compounds multiplicatively across iterations unless reset
    _check_mass(p, where)
    p /= p.sum()
    return p


def quantize_gaussian(mean: float, var: float, K: int, bin_width: float) -> np.ndarray:
    """Mass of ``N(mean, var)`` in each grid cell, tails into the end bins."""
    edges = (np.arange(-K, K) + 0.5) * bin_width
    cdf = ndtr((edges - mean) / math.sqrt(var))
    return np.diff(np.concatenate(([0.0], cdf, [1.0])))


def quantize_two_point(llr: float, p_plus: float, K: int, bin_width: float) -> np.ndarray:
    """``+llr`` with probability ``p_plus`` and ``-llr`` otherwise, rounded to the grid."""
    k = min(int(round(llr / bin_width)), K)
    p = np.zeros(2 * K + 1)
    p[K + k] += p_plus
    p[K - k] += 1.0 - p_plus
    return p


def channel_density(es_n0_db: float, K: int, bin_width: float) -> np.ndarray:
    """LLR density ``N(2/sigma^2, 4/sigma^2)`` of the biAWGN channel, all-zero codeword."""
    s2 = jfunc.noise_variance(es_n0_db)
    return quantize_gaussian(2.0 / s2, 4.0 / s2, K, bin_width)


def prior_density(omega: float, K: int, bin_width: float) -> np.ndarray:
    """Two-point mass of the BSC(omega) a-priori channel."""
    return quantize_two_point(prior_llr(omega), 1.0 - omega, K, bin_width)


@dataclass
class DeRun:
    converged: bool
    iterations: int
    error_probability: float
    app: list | None = None


def _check_mass(p: np.ndarray, where: str):
    if abs(p.sum() - 1.0) > MASS_TOL:
        raise AssertionError(f"density mass drifted to {p.sum()!r} at {where}")


def de_run(base: BaseMatrix, omega: float, es_n0_db: float, bin_width: float = DEFAULT_BIN_WIDTH,
           llr_range: float = DEFAULT_RANGE, max_iter: int = 5000, target: float = 1e-9,
           stall_tol: float = 1e-14) -> DeRun:
    """Iterate quantized DE; converged when every punctured APP error mass < ``target``."""
    K = int(round(llr_range / bin_width))
    B = base.entries
    m0, ntot = B.shape
    inputs = [prior_density(omega, K, bin_width) if j < base.h0 else None for j in range(ntot)]
    ch = channel_density(es_n0_db, K, bin_width)
    for j in range(base.h0, ntot):
        inputs[j] = ch
    edges = [(i, j) for i in range(m0) for j in range(ntot) if B[i, j] > 0]
    erasure = np.zeros(2 * K + 1)
    erasure[K] = 1.0
    c2v = {e: erasure for e in edges}
    pe = 1.0
    for it in range(1, max_iter + 1):
        # variable nodes
        v2c = {}
        app = []
        for j in range(ntot):
            col = [(i, B[i, j]) for i in range(m0) if B[i, j] > 0]
            for i, _ in col:
                parts = [inputs[j]]
                for s, b in col:
                    parts += [c2v[(s, j)]] * (b - (s == i))
                v2c[(i, j)] = _renormalize(vn_combine(parts), f"VN {j}")
        # check nodes
        new_c2v = {}
        for i in range(m0):
            row = [(j, B[i, j]) for j in range(ntot) if B[i, j] > 0]
            seq = []
            for j, b in row:
                seq += [(j, v2c[(i, j)])] * b
            first = {}
            for pos, (j, _) in enumerate(seq):
                first.setdefault(j, pos)
            prefix = [None] * (len(seq) + 1)
            suffix = [None] * (len(seq) + 1)
            for pos in range(len(seq)):
                d = seq[pos][1]
                prefix[pos + 1] = d if prefix[pos] is None else _cn_pair(prefix[pos], d, _tanh_table(K, bin_width))
            for pos in range(len(seq) - 1, -1, -1):
                d = seq[pos][1]
                suffix[pos] = d if suffix[pos + 1] is None else _cn_pair(d, suffix[pos + 1], _tanh_table(K, bin_width))
            for j, pos in first.items():
                left, right = prefix[pos], suffix[pos + 1]
                if left is None:
                    out = right
                elif right is None:
                    out = left
                else:
                    out = _cn_pair(left, right, _tanh_table(K, bin_width))
                new_c2v[(i, j)] = _renormalize(out.copy(), f"CN {i}")
        change = max(np.abs(new_c2v[e] - c2v[e]).sum() for e in edges)
        c2v = new_c2v
        for j in range(base.h0):
            parts = [inputs[j]]
            for i in range(m0):
                if B[i, j]:
                    parts += [c2v[(i, j)]] * int(B[i, j])
            app.append(vn_combine(parts))
        pe = max(_error_probability(a) for a in app)
        if pe < target:
            return DeRun(True, it, pe, app)
        if change < stall_tol:
            return DeRun(False, it, pe, app)
    return DeRun(False, max_iter, pe, None)


def de_converges(base: BaseMatrix, omega: float, es_n0_db: float, **kw) -> bool:
    return de_run(base, omega, es_n0_db, **kw).converged


def _bracket(converges, start: float, step: float = 0.25, limits=BRACKET_DB):
    """Grow an interval around ``start`` until it holds a failure and a success."""
    lo, hi = start - step, start + step
    trace = []
    while True:
        ok = converges(hi)
        trace.append((hi, ok))
        if ok:
            break
        lo, hi = hi, min(hi + 2 * step, limits[1])
        if lo >= limits[1]:
            raise RuntimeError(f"no convergence in bracket even at {limits[1]} dB")
    while True:
        ok = converges(lo)
        trace.append((lo, ok))
        if not ok:
            break
        hi, lo = lo, max(lo - 2 * step, limits[0])
        if hi <= limits[0]:
            return limits[0], limits[0], trace
    return lo, hi, trace


def de_threshold(base: BaseMatrix, omega: float, rate: float | None = None, tol_db: float = 0.01,
                 start_db: float | None = None, **kw) -> ThresholdResult:
    """Quantized-DE threshold.

    The search bracket is grown outward from ``start_db`` (default: the PEXIT
    threshold) until it contains a failing and a converging point, then bisected.
    """
    def converges(g):
        return de_converges(base, omega, g, **kw)

    if start_db is None:
        start_db = pexit_threshold(base, omega, rate, tol_db=0.05).gamma_star
    lo, hi, trace = _bracket(converges, start_db)
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        ok = converges(mid)
        trace.append((mid, ok))
        if ok:
            hi = mid
        else:
            lo = mid
    return ThresholdResult(hi, rate, omega, trace)


def de_threshold_for_rate(base: BaseMatrix, rate: float, **kw) -> ThresholdResult:
    omega = omega_for_rate(rate, float(base.inner_rate))
    return de_threshold(base, omega, rate, **kw)
