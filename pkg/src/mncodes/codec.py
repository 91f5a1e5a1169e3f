"""MacKay-Neal encoder and belief-propagation decoder.

The decoder runs flooding sum-product on the Tanner graph of the mother code
``H = [H1 | H2]``.  The first ``h`` variable nodes are punctured and receive
only the prior LLR derived from the matcher composition; the remaining ``n``
receive channel LLRs ``2 y / sigma^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from .matcher import CompositionError, MatcherSpec, dematch, match
from .protograph import LiftedCode

DEFAULT_MAX_ITER = 100
CN_CLIP = 50.0


class PayloadOverflowError(ValueError):
    """The dematched index does not fit the ``floor(log2 M)``-bit payload."""


@dataclass
class LlrFrame:
    prior: np.ndarray
    channel: np.ndarray

    @classmethod
    def direct(cls, spec: MatcherSpec, y: np.ndarray, sigma2: float) -> "LlrFrame":
        """All punctured bits biased towards 0 by ``+Delta``."""
        return cls(np.full(spec.h, spec.delta), 2.0 * np.asarray(y, dtype=float) / sigma2)

    @classmethod
    def epc(cls, spec: MatcherSpec, z: np.ndarray, y: np.ndarray, sigma2: float) -> "LlrFrame":
        """Equivalent-parallel-channel frame: prior ``(1 - 2 z_i) Delta`` from the observation ``z``."""
        z = np.asarray(z, dtype=float)
        return cls((1.0 - 2.0 * z) * spec.delta, 2.0 * np.asarray(y, dtype=float) / sigma2)

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.prior, self.channel]).astype(np.float64)


@dataclass
class DecodeResult:
    v_hat: np.ndarray
    c_hat: np.ndarray
    converged: bool
    iterations_used: int


def encode(code: LiftedCode, spec: MatcherSpec, index: int):
    """Return ``(v, c, x)``: matcher output, inner codeword and BPSK symbols ``1 - 2c``."""
    if spec.h != code.h:
        raise ValueError(f"matcher length {spec.h} does not match code h={code.h}")
    v = match(spec, index)
    c = encode_inner(code, v)
    return v, c, 1.0 - 2.0 * c


def encode_inner(code: LiftedCode, v) -> np.ndarray:
    v = np.asarray(v, dtype=bool)
    return (code.G[v].sum(axis=0, dtype=np.int64) & 1).astype(np.uint8)


@dataclass(frozen=True)
class _Graph:
    chk_ptr: np.ndarray
    chk_var: np.ndarray
    var_ptr: np.ndarray
    var_edge: np.ndarray
    nvar: int


@lru_cache(maxsize=8)
def _graph_for(code: LiftedCode) -> _Graph:
    chk, var = code.edges
    m = code.m
    nvar = code.h + code.n
    chk_ptr = np.zeros(m + 1, dtype=np.int64)
    np.add.at(chk_ptr, chk + 1, 1)
    chk_ptr = np.cumsum(chk_ptr)
    order = np.argsort(var, kind="stable")
    var_ptr = np.zeros(nvar + 1, dtype=np.int64)
    np.add.at(var_ptr, var + 1, 1)
    var_ptr = np.cumsum(var_ptr)
    return _Graph(chk_ptr, var.copy(), var_ptr, order.astype(np.int64), nvar)


@njit(cache=True, nogil=True)
def _bp(chk_ptr, chk_var, var_ptr, var_edge, llr, max_iter, bits):
    m = chk_ptr.shape[0] - 1
    nvar = llr.shape[0]
    ne = chk_var.shape[0]
    v2c = np.empty(ne)
    c2v = np.zeros(ne)
    t = np.empty(ne)
    for e in range(ne):
        v2c[e] = llr[chk_var[e]]
    for it in range(1, max_iter + 1):
        # check nodes: exact tanh rule with leave-one-out products
        for c in range(m):
            a, b = chk_ptr[c], chk_ptr[c + 1]
            for e in range(a, b):
                x = v2c[e]
                if x > CN_CLIP:
                    x = CN_CLIP
                elif x < -CN_CLIP:
                    x = -CN_CLIP
                t[e] = math.tanh(0.5 * x)
            prod = 1.0
            for e in range(a, b):
                c2v[e] = prod
                prod *= t[e]
            prod = 1.0
            for e in range(b - 1, a - 1, -1):
                p = c2v[e] * prod
                prod *= t[e]
                if p > 0.9999999999999998:
                    p = 0.9999999999999998
                elif p < -0.9999999999999998:
                    p = -0.9999999999999998
                c2v[e] = 2.0 * math.atanh(p)
        # variable nodes
        for v in range(nvar):
            s = llr[v]
            for k in range(var_ptr[v], var_ptr[v + 1]):
                s += c2v[var_edge[k]]
            bits[v] = 1 if s < 0.0 else 0
            for k in range(var_ptr[v], var_ptr[v + 1]):
                e = var_edge[k]
                v2c[e] = s - c2v[e]
        ok = True
        for c in range(m):
            parity = 0
            for e in range(chk_ptr[c], chk_ptr[c + 1]):
                parity ^= bits[chk_var[e]]
            if parity:
                ok = False
                break
        if ok:
            return True, it
    return False, max_iter


def decode_llr(code: LiftedCode, llr: np.ndarray, max_iter: int = DEFAULT_MAX_ITER) -> DecodeResult:
    """BP on a full-length (punctured then transmitted) LLR vector."""
    g = _graph_for(code)
    llr = np.ascontiguousarray(llr, dtype=np.float64)
    if llr.shape != (g.nvar,):
        raise ValueError(f"expected {g.nvar} LLRs, got {llr.shape}")
    bits = np.zeros(g.nvar, dtype=np.uint8)
    ok, it = _bp(g.chk_ptr, g.chk_var, g.var_ptr, g.var_edge, llr, max_iter, bits)
    return DecodeResult(bits[: code.h].copy(), bits[code.h :].copy(), bool(ok), int(it))


def decode_bp(code: LiftedCode, frame: LlrFrame, max_iter: int = DEFAULT_MAX_ITER) -> DecodeResult:
    if frame.prior.shape != (code.h,) or frame.channel.shape != (code.n,):
        raise ValueError("frame dimensions do not match the code")
    return decode_llr(code, frame.stacked(), max_iter)


def decode_full(code: LiftedCode, spec: MatcherSpec, frame: LlrFrame,
                max_iter: int = DEFAULT_MAX_ITER) -> int:
    """BP followed by the dematcher; raises on composition or payload violations."""
    res = decode_bp(code, frame, max_iter)
    index = dematch(spec, res.v_hat)
    if index >= 1 << spec.payload_bits:
        raise PayloadOverflowError(f"index {index} exceeds the {spec.payload_bits}-bit payload")
    return index


def syndrome_ok(code: LiftedCode, v, c) -> bool:
    word = np.concatenate([np.asarray(v), np.asarray(c)]).astype(np.int64)
    return not ((code.H @ word) % 2).any()


__all__ = [
    "CN_CLIP",
    "CompositionError",
    "DEFAULT_MAX_ITER",
    "DecodeResult",
    "LlrFrame",
    "PayloadOverflowError",
    "decode_bp",
    "decode_full",
    "decode_llr",
    "encode",
    "encode_inner",
    "syndrome_ok",
]
