"""Error-floor estimates for mismatched-metric decoding of MacKay-Neal codes.

The pairwise error probability of a competitor at input distance ``delta1``
and output distance ``delta2`` averages a Gaussian tail over the
hypergeometric number ``E`` of a-priori flips that fall on the differing input
positions.  Sums over an input-output weight spectrum give the union bound;
its largest term is the truncated union bound.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, log_ndtr, logsumexp

from .codec import decode_llr, encode_inner
from .matcher import MatcherSpec
from .protograph import LiftedCode

BRUTE_FORCE_MAX_H = 24


@dataclass(frozen=True)
class SpectrumEntry:
    delta1: int
    delta2: int
    multiplicity: int


@dataclass(frozen=True)
class PepParams:
    h: int
    w: int
    sigma2: float

    @property
    def omega(self) -> float:
        return self.w / self.h

    @property
    def delta(self) -> float:
        if not 0 < self.w < self.h:
            raise ValueError("prior LLR is infinite for omega in {0, 1}")
        return math.log((self.h - self.w) / self.w)

    @classmethod
    def from_snr(cls, h: int, w: int, es_n0_db: float) -> "PepParams":
        return cls(h, w, 1.0 / (2.0 * 10.0 ** (es_n0_db / 10.0)))


def hypergeometric_pmf(h: int, K: int, d: int):
    """Support and pmf of the overlap between a fixed ``K``-subset and a random ``d``-subset of ``h``."""
    if not (0 <= K <= h and 0 <= d <= h):
        raise ValueError(f"need 0 <= K, d <= h; got h={h}, K={K}, d={d}")
    e = np.arange(max(0, d - (h - K)), min(d, K) + 1)
    logp = (
        gammaln(K + 1) - gammaln(e + 1) - gammaln(K - e + 1)
        + gammaln(h - K + 1) - gammaln(d - e + 1) - gammaln(h - K - d + e + 1)
        - gammaln(h + 1) + gammaln(d + 1) + gammaln(h - d + 1)
    )
    p = np.exp(logp - logp.max())
    return e, p / p.sum()


def log_pep(params: PepParams, delta1: int, delta2: int, printed_form: bool = False) -> float:
    """Natural log of the pairwise error probability.

    ``printed_form`` evaluates ``delta1 - 2 E Delta`` in place of
    ``(delta1 - 2 E) Delta`` in the Gaussian-tail argument, for comparison.
    """
    if delta1 < 0 or delta2 < 0:
        raise ValueError("distances must be non-negative")
    e, pe = hypergeometric_pmf(params.h, params.w, delta1)
    D = params.delta if 0 < params.w < params.h else 0.0
    prior = delta1 - 2.0 * e * D if printed_form else (delta1 - 2.0 * e) * D
    if delta2 == 0:
        # no channel difference: the competitor wins whenever the prior term is <= 0
        mass = float(pe[prior <= 0.0].sum())
        return math.log(mass) if mass > 0 else -math.inf
    s = math.sqrt(params.sigma2)
    arg = (2.0 * delta2 / params.sigma2 + prior) / (2.0 * math.sqrt(delta2) / s)
    return float(logsumexp(log_ndtr(-arg), b=pe))


def pep(params: PepParams, delta1: int, delta2: int, printed_form: bool = False) -> float:
    return math.exp(log_pep(params, delta1, delta2, printed_form))


@dataclass(frozen=True)
class BoundResult:
    value: float
    is_bound: bool
    dominant: SpectrumEntry | None = None

    @property
    def kind(self) -> str:
        return "bound" if self.is_bound else "estimate from partial spectrum"


def _log_terms(spectrum, params, printed_form):
    return np.array([
        math.log(s.multiplicity) + log_pep(params, s.delta1, s.delta2, printed_form) for s in spectrum
    ])


def union_bound(spectrum, params: PepParams, complete: bool = False, printed_form: bool = False) -> BoundResult:
    """``sum A * PEP`` over the spectrum, clamped to 1; a true bound only for a complete spectrum."""
    spectrum = list(spectrum)
    if not spectrum:
        return BoundResult(0.0, complete)
    logs = _log_terms(spectrum, params, printed_form)
    dom = spectrum[int(np.argmax(logs))]
    return BoundResult(min(1.0, math.exp(float(logsumexp(logs)))), complete, dom)


def truncated_union_bound(spectrum, params: PepParams, printed_form: bool = False) -> BoundResult:
    """The single largest ``A * PEP`` term at this operating point."""
    spectrum = list(spectrum)
    if not spectrum:
        raise ValueError("truncated union bound needs a non-empty spectrum")
    logs = _log_terms(spectrum, params, printed_form)
    k = int(np.argmax(logs))
    return BoundResult(min(1.0, math.exp(float(logs[k]))), False, spectrum[k])


def spectrum_from_words(words) -> list[SpectrumEntry]:
    """Bin ``(v, c)`` pairs by ``(w_H(v), w_H(c))``."""
    counts = Counter((int(np.count_nonzero(v)), int(np.count_nonzero(c))) for v, c in words)
    return [SpectrumEntry(d1, d2, m) for (d1, d2), m in sorted(counts.items())]


def _check_tiny(code: LiftedCode):
    if code.h > BRUTE_FORCE_MAX_H:
        raise ValueError(f"exhaustive search needs h <= {BRUTE_FORCE_MAX_H}, got {code.h}")


@lru_cache(maxsize=4)
def _codebook(code: LiftedCode):
    _check_tiny(code)
    ws = np.array(list(itertools.product((0, 1), repeat=code.h)), dtype=np.uint8)
    cs = (ws.astype(np.float64) @ code.G.astype(np.float64)).astype(np.int64) & 1
    return ws, cs.astype(np.uint8)


def exhaustive_spectrum(code: LiftedCode) -> list[SpectrumEntry]:
    """Complete input-output weight enumerator by walking all ``2^h`` inputs."""
    ws, cs = _codebook(code)
    return spectrum_from_words(zip(ws[1:], cs[1:]))


def brute_force_decode(code: LiftedCode, spec: MatcherSpec, y, z, sigma2: float, metric: str = "MM",
                       reference=None) -> np.ndarray:
    """Exhaustive decision on ``w`` from channel output ``y`` and a-priori observation ``z``.

    ``ML`` uses the exact constant-weight a-priori channel, ``MM`` the BSC
    surrogate.  When ``reference`` is given, a competitor tying with it wins.
    ``y`` and ``z`` may carry a leading batch axis; the result then has one
    decision per row.
    """
    ws, cs = _codebook(code)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=np.uint8)
    single = y.ndim == 1
    y, z = np.atleast_2d(y), np.atleast_2d(z)
    x = 1.0 - 2.0 * cs
    # twice the log-likelihood up to a per-frame constant
    score = (y @ x.T) * (2.0 / sigma2)
    dist = (z[:, None, :] ^ ws[None, :, :]).sum(axis=2)
    if metric == "ML":
        score = np.where(dist == spec.w, score, -np.inf)
    elif metric == "MM":
        score = score - 2.0 * spec.delta * dist
    else:
        raise ValueError(f"unknown metric {metric!r}")
    best = score.max(axis=1, keepdims=True)
    winners = score >= best - 1e-9 * np.maximum(1.0, np.abs(best))
    if reference is not None:
        ref = np.asarray(reference, dtype=np.uint8)
        is_ref = (ws == ref).all(axis=1)
        others = winners & ~is_ref
        winners = np.where(others.any(axis=1, keepdims=True), others, winners)
    pick = winners.argmax(axis=1)
    out = ws[pick].copy()
    return out[0] if single else out


@dataclass
class EnumerationReport:
    spectrum: list
    words: int
    trials: int
    min_delta2: int | None


def enumerate_low_weight(code: LiftedCode, budget: int = 5000, impulse_max: int = 4,
                         impulse: float = 20.0, background: float = 1.0, max_iter: int = 50,
                         seed: int = 0, max_delta2: int | None = None) -> EnumerationReport:
    """Error-impulse search for low-weight codewords of the mother code.

    The decoder sees the all-zero word with reliability ``background`` on
    every coordinate except an impulse set, whose LLRs are pushed to
    ``background - impulse``.  Converged non-zero outputs are codewords near
    the impulse; each is expanded to its quasi-cyclic orbit.  Impulse sets of
    size one (every coordinate) are always tried; larger sets are sampled
    until ``budget`` decodes have been spent.
    """
    rng = np.random.default_rng(seed)
    N = code.h + code.n
    ell = code.ell
    found = set()
    words = []
    trials = 0

    def run(positions):
        nonlocal trials
        trials += 1
        llr = np.full(N, background)
        llr[list(positions)] -= impulse
        res = decode_llr(code, llr, max_iter)
        if not res.converged:
            return
        word = np.concatenate([res.v_hat, res.c_hat])
        if not word.any():
            return
        for shift in range(ell):
            rolled = np.roll(word.reshape(-1, ell), shift, axis=1).reshape(-1)
            key = np.packbits(rolled).tobytes()
            if key in found:
                break
            found.add(key)
            words.append((rolled[: code.h].copy(), rolled[code.h :].copy()))

    # one copy per variable type suffices by circulant symmetry
    singles = [j * ell for j in range(code.base.n0_total)]
    for p in singles:
        run((p,))
    sizes = list(range(2, impulse_max + 1))
    while trials < budget and sizes:
        k = int(rng.choice(sizes))
        first = int(rng.choice(singles))
        rest = rng.choice(N, size=k - 1, replace=False)
        run({first, *map(int, rest)})
    spec = spectrum_from_words(words)
    if max_delta2 is not None:
        spec = [s for s in spec if s.delta2 <= max_delta2]
    min_d2 = min((s.delta2 for s in spec), default=None)
    return EnumerationReport(spec, len(words), trials, min_d2)


def inner_word(code: LiftedCode, v) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(v, dtype=np.uint8)
    return v, encode_inner(code, v)


def save_spectrum(spectrum, path) -> None:
    with open(path, "w") as fh:
        fh.write("delta1,delta2,multiplicity\n")
        for s in spectrum:
            fh.write(f"{s.delta1},{s.delta2},{s.multiplicity}\n")


def load_spectrum(path) -> list[SpectrumEntry]:
    out = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "delta1,delta2,multiplicity":
            raise ValueError(f"unexpected spectrum header {header!r}")
        for line in fh:
            if line.strip():
                d1, d2, m = (int(t) for t in line.split(","))
                out.append(SpectrumEntry(d1, d2, m))
    return out
