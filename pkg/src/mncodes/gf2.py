"""Dense GF(2) linear algebra on bit-packed rows."""

from __future__ import annotations

import numpy as np


def pack(a: np.ndarray) -> np.ndarray:
    """Pack a 0/1 matrix row-wise into uint64 words (little bit order)."""
    a = np.asarray(a, dtype=np.uint8) & 1
    rows, cols = a.shape
    nwords = max(1, -(-cols // 64))
    padded = np.zeros((rows, nwords * 64), dtype=np.uint8)
    padded[:, :cols] = a
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64).reshape(rows, nwords)


def unpack(p: np.ndarray, cols: int) -> np.ndarray:
    bits = np.unpackbits(p.view(np.uint8).reshape(p.shape[0], -1), axis=1, bitorder="little")
    return bits[:, :cols].astype(np.uint8)


def _eliminate(m: np.ndarray, ncols: int):
    """In-place reduced row echelon form over the first ``ncols`` columns.

    Returns the pivot column of each pivot row, in order.
    """
    rows = m.shape[0]
    pivots = []
    r = 0
    for c in range(ncols):
        if r == rows:
            break
        w, b = divmod(c, 64)
        bit = np.uint64(1) << np.uint64(b)
        col = (m[r:, w] & bit) != 0
        hits = np.flatnonzero(col)
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            m[[r, p]] = m[[p, r]]
        mask = (m[:, w] & bit) != 0
        mask[r] = False
        m[mask] ^= m[r]
        pivots.append(c)
        r += 1
    return pivots


def rank(a: np.ndarray) -> int:
    a = np.asarray(a)
    m = pack(a)
    return len(_eliminate(m, a.shape[1]))


def solve_right(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return ``X`` with ``a @ X = b`` (mod 2) for square invertible ``a``."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("solve_right needs a square matrix")
    m = pack(np.hstack([a, b]))
    pivots = _eliminate(m, n)
    if len(pivots) != n:
        raise np.linalg.LinAlgError("matrix is singular over GF(2)")
    return unpack(m, n + b.shape[1])[:, n:]


def inverse(a: np.ndarray) -> np.ndarray:
    return solve_right(a, np.eye(np.asarray(a).shape[0], dtype=np.uint8))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # float products are exact here (sums stay far below 2**53) and use BLAS
    prod = np.asarray(a, dtype=np.float64) @ np.asarray(b, dtype=np.float64)
    return (prod.astype(np.int64) & 1).astype(np.uint8)
