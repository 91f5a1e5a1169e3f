"""Constant-composition distribution matcher.

Messages are indices ``0 <= index < C(h, w)``; codewords are the length-``h``
binary vectors of Hamming weight ``w``, listed in colexicographic order of
their support sets (the combinadic number system).  All arithmetic is exact.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .ratemath import outer_rate_finite, prior_llr


class CompositionError(ValueError):
    """A vector handed to the dematcher does not have the prescribed weight."""


@dataclass(frozen=True)
class MatcherSpec:
    h: int
    w: int

    def __post_init__(self):
        if self.h <= 0 or not 0 <= self.w <= self.h:
            raise ValueError(f"need h > 0 and 0 <= w <= h, got h={self.h}, w={self.w}")

    @classmethod
    def from_omega(cls, h: int, omega: float) -> "MatcherSpec":
        return cls(h, int(round(omega * h)))

    @property
    def M(self) -> int:
        return math.comb(self.h, self.w)

    @property
    def omega(self) -> float:
        return self.w / self.h

    @property
    def delta(self) -> float:
        """Prior LLR magnitude ``ln((1 - omega) / omega)``."""
        return prior_llr(self.omega)

    @property
    def payload_bits(self) -> int:
        """Whole information bits per frame, ``floor(log2 M)``."""
        return self.M.bit_length() - 1

    @property
    def rate(self) -> float:
        return outer_rate_finite(self.h, self.w)

    @property
    def payload_rate(self) -> float:
        return self.payload_bits / self.h


def match(spec: MatcherSpec, index: int) -> np.ndarray:
    """The ``index``-th weight-``w`` vector in colex order."""
    if not 0 <= index < spec.M:
        raise IndexError(f"index {index} outside [0, {spec.M})")
    v = np.zeros(spec.h, dtype=np.uint8)
    if spec.w == 0:
        return v
    # walk c downwards keeping B = C(c, k) through exact ratio updates
    c, k = spec.h - 1, spec.w
    B = math.comb(c, k)
    while True:
        while B > index:
            B = B * (c - k) // c
            c -= 1
        v[c] = 1
        index -= B
        if k == 1:
            return v
        B = B * k // c  # C(c - 1, k - 1)
        c -= 1
        k -= 1


def dematch(spec: MatcherSpec, v) -> int:
    """Colex rank of a weight-``w`` vector; inverse of :func:`match`."""
    v = np.asarray(v)
    if v.shape != (spec.h,):
        raise ValueError(f"expected a length-{spec.h} vector, got shape {v.shape}")
    support = np.flatnonzero(v)
    if support.size != spec.w:
        raise CompositionError(f"vector has weight {support.size}, expected {spec.w}")
    return sum(math.comb(int(c), k) for k, c in enumerate(support, start=1))


def bits_to_index(bits) -> int:
    """Big-endian bit vector to integer."""
    out = 0
    for b in np.asarray(bits, dtype=np.uint8):
        out = (out << 1) | int(b)
    return out


def index_to_bits(index: int, k: int) -> np.ndarray:
    if not 0 <= index < (1 << k):
        raise ValueError(f"index {index} does not fit in {k} bits")
    return np.array([(index >> (k - 1 - t)) & 1 for t in range(k)], dtype=np.uint8)


@functools.lru_cache(maxsize=64)
def _int64_rows(h: int, w: int) -> np.ndarray:
    """``table[k, c] = C(c, k)`` for ``k <= w``, ``c < h``."""
    if math.comb(h, w) >= 1 << 62:
        raise OverflowError("batch matching needs C(h, w) < 2**62")
    return np.array([[math.comb(c, k) for c in range(h)] for k in range(w + 1)], dtype=np.int64)


def match_many(spec: MatcherSpec, indices) -> np.ndarray:
    """Vectorized :func:`match` for small codebooks; one row per index."""
    table = _int64_rows(spec.h, spec.w)
    idx = np.array(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= spec.M):
        raise IndexError(f"indices outside [0, {spec.M})")
    out = np.zeros((idx.size, spec.h), dtype=np.uint8)
    rows = np.arange(idx.size)
    for k in range(spec.w, 0, -1):
        # largest c with C(c, k) <= idx; rows of the table are non-decreasing in c
        c = np.searchsorted(table[k], idx, side="right") - 1
        out[rows, c] = 1
        idx -= table[k][c]
    return out


def dematch_many(spec: MatcherSpec, vs) -> np.ndarray:
    """Vectorized :func:`dematch`; every row must have weight ``w``."""
    table = _int64_rows(spec.h, spec.w)
    vs = np.asarray(vs)
    if vs.ndim != 2 or vs.shape[1] != spec.h:
        raise ValueError(f"expected an (N, {spec.h}) array")
    if (np.count_nonzero(vs, axis=1) != spec.w).any():
        raise CompositionError(f"every row must have weight {spec.w}")
    # k-th smallest support element of each row contributes C(c, k)
    rank = np.cumsum(vs != 0, axis=1)
    k = np.where(vs != 0, rank, 0)
    return np.where(k > 0, table[k, np.arange(spec.h)], 0).sum(axis=1)
