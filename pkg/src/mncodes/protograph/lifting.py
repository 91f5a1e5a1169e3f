"""Quasi-cyclic lifting of a base matrix with a circulant progressive-edge-growth rule.

Every parallel edge of base entry ``(i, j)`` becomes an ``ell x ell`` circulant
permutation: check ``(i, r)`` is joined to variable ``(j, (r + s) % ell)``.
Lifted column ``j * ell + k`` is copy ``k`` of variable type ``j``; lifted row
``i * ell + r`` is copy ``r`` of check type ``i``.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from .. import gf2
from .base import BaseMatrix, validate

MAX_SEED_RETRIES = 32
NO_CYCLE = 1 << 30
LIFT_STRUCTURE = "single-stage circulant"


class UnliftableError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LiftedCode:
    base: BaseMatrix
    ell: int
    shifts: dict  # (i, j) -> tuple of shifts, one per parallel edge
    seed: int
    requested_seed: int | None = None
    _generator: np.ndarray | None = field(default=None, repr=False)

    @property
    def h(self) -> int:
        return self.ell * self.base.h0

    @property
    def n(self) -> int:
        return self.ell * self.base.n0

    @property
    def m(self) -> int:
        return self.ell * self.base.m0

    @property
    def puncture_map(self) -> np.ndarray:
        """Mother-code coordinates that are never transmitted (the first ``h``)."""
        return np.arange(self.h)

    @cached_property
    def H(self) -> sparse.csr_matrix:
        return build_parity_check(self.base, self.ell, self.shifts)

    @property
    def H1(self) -> sparse.csr_matrix:
        return self.H[:, : self.h]

    @property
    def H2(self) -> sparse.csr_matrix:
        return self.H[:, self.h :]

    @cached_property
    def G(self) -> np.ndarray:
        if self._generator is not None:
            return self._generator
        return compute_generator(self)

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """``(check_index, variable_index)`` of every edge, sorted by check."""
        coo = self.H.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order].astype(np.int64), coo.col[order].astype(np.int64)

    def shift_table_text(self) -> str:
        lines = [f"{self.ell} {self.base.m0} {self.base.n0_total} {self.base.h0} {self.seed}"]
        lines += [" ".join(str(v) for v in row) for row in self.base.entries]
        for (i, j), s in sorted(self.shifts.items()):
            lines.append(f"{i} {j} " + " ".join(str(v) for v in s))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_shift_table_text(cls, text: str) -> "LiftedCode":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        ell, m0, ntot, h0, seed = (int(t) for t in rows[0])
        entries = np.array([[int(t) for t in r] for r in rows[1 : 1 + m0]], dtype=np.int64)
        if entries.shape != (m0, ntot):
            raise ValueError("shift table header does not match its base matrix")
        shifts = {}
        for r in rows[1 + m0 :]:
            i, j, *s = (int(t) for t in r)
            shifts[(i, j)] = tuple(s)
        base = BaseMatrix(entries, h0)
        for (i, j), s in shifts.items():
            if len(s) != entries[i, j]:
                raise ValueError(f"entry ({i}, {j}) needs {entries[i, j]} shifts, got {len(s)}")
        return cls(base, ell, shifts, seed)

    def content_hash(self) -> str:
        return hashlib.sha256(self.shift_table_text().encode()).hexdigest()


def build_parity_check(base: BaseMatrix, ell: int, shifts: dict) -> sparse.csr_matrix:
    rows, cols = [], []
    r = np.arange(ell)
    for (i, j), ss in shifts.items():
        for s in ss:
            rows.append(i * ell + r)
            cols.append(j * ell + (r + s) % ell)
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    data = np.ones(rows.size, dtype=np.int64)
    H = sparse.coo_matrix((data, (rows, cols)), shape=(base.m0 * ell, base.n0_total * ell)).tocsr()
    H.sum_duplicates()
    H.data %= 2
    H.eliminate_zeros()
    return H.astype(np.uint8)


def _check_distances(base: BaseMatrix, ell: int, placed: list, j0: int) -> np.ndarray:
    """BFS distances (in edges) from variable ``(j0, 0)`` to every check copy.

    Returns an ``(m0, ell)`` array; unreachable checks get ``NO_CYCLE``.
    """
    m0, ntot = base.entries.shape
    dist = np.full((m0, ell), NO_CYCLE, dtype=np.int64)
    vseen = np.zeros((ntot, ell), dtype=bool)
    vfront = np.zeros((ntot, ell), dtype=bool)
    vfront[j0, 0] = True
    vseen[j0, 0] = True
    cseen = np.zeros((m0, ell), dtype=bool)
    depth = 0
    while vfront.any():
        cfront = np.zeros((m0, ell), dtype=bool)
        for i, j, s in placed:
            # variable (j, k) meets check (i, k - s)
            cfront[i] |= np.roll(vfront[j], -s)
        cfront &= ~cseen
        depth += 1
        dist[cfront] = depth
        cseen |= cfront
        if not cfront.any():
            break
        vfront = np.zeros((ntot, ell), dtype=bool)
        for i, j, s in placed:
            vfront[j] |= np.roll(cfront[i], s)
        vfront &= ~vseen
        vseen |= vfront
        depth += 1
    return dist


def _cycle_profile(placed: list, new: tuple, cand: np.ndarray, ell: int, max_len: int = 8):
    """Cycles of length <= ``max_len`` through a new edge, per candidate shift.

    Closed base-graph walks that start with the new edge are enumerated
    symbolically; a walk using the new edge ``k`` times (net, signed) with
    constant offset ``c`` closes in the lift iff ``k s + c = 0 (mod ell)``.
    This catches cycles that reuse the new circulant, which the BFS misses.

    Returns the shortest closing length (``NO_CYCLE`` if none) and a
    ``{length: count}`` map of how many walk classes close at each length.
    """
    i0, j0 = new
    edges = [(i, j, s) for i, j, s in placed] + [(i0, j0, None)]
    new_id = len(edges) - 1
    at_var: dict = {}
    at_chk: dict = {}
    for e, (i, j, _) in enumerate(edges):
        at_var.setdefault(j, []).append(e)
        at_chk.setdefault(i, []).append(e)
    conds: dict = {}

    def walk(e_prev, node_is_var, node, k, c, length):
        if length >= max_len:
            return
        nbrs = at_var.get(node, []) if node_is_var else at_chk.get(node, [])
        for e in nbrs:
            if e == e_prev:
                continue
            i, j, s = edges[e]
            sign = -1 if node_is_var else 1
            k2, c2 = (k + sign, c) if e == new_id else (k, c + sign * s)
            if node_is_var:
                walk(e, False, i, k2, c2, length + 1)
            else:
                if j == j0 and e != new_id and length + 1 >= 4:
                    conds.setdefault(length + 1, Counter())[(k2, c2 % ell)] += 1
                walk(e, True, j, k2, c2, length + 1)

    # first edge: variable (j0, 0) to check (i0, -s)
    walk(new_id, False, i0, -1, 0, 1)
    shortest = np.full(cand.size, NO_CYCLE, dtype=np.int64)
    counts = {}
    for length in sorted(conds, reverse=True):
        hit = np.zeros(cand.size, dtype=bool)
        cnt = np.zeros(cand.size, dtype=np.int64)
        for (k, c), mult in conds[length].items():
            closes = (k * cand + c) % ell == 0
            hit |= closes
            cnt += mult * closes
        shortest[hit] = length
        counts[length] = cnt
    return shortest, counts


def _short_cycles(placed: list, new: tuple, cand: np.ndarray, ell: int, max_len: int = 6) -> np.ndarray:
    """Shortest cycle of length <= ``max_len`` through a new edge, per candidate shift."""
    return _cycle_profile(placed, new, cand, ell, max_len)[0]


def _pairing_period(shifts: tuple, cand: np.ndarray, ell: int) -> np.ndarray:
    """Largest proper divisor ``g`` of ``ell`` under which ``shifts + (s,)`` pair up mod ``g``.

    Such a circulant sums to zero on every block of period ``g``, which gives
    mother-code words of weight ``ell / g`` per block.  1 is the best value.
    """
    out = np.ones(cand.size, dtype=np.int64)
    for g in range(2, ell):
        if ell % g:
            continue
        for k, s in enumerate(cand):
            residues = Counter(x % g for x in (*shifts, int(s)))
            if all(c % 2 == 0 for c in residues.values()):
                out[k] = g
    return out


def _peg_shifts(base: BaseMatrix, ell: int, rng: np.random.Generator, allow_collapse: bool = False) -> dict:
    b = base.entries
    order = sorted(range(base.n0_total), key=lambda j: (-int(b[:, j].sum()), j))
    placed = []  # (i, j, s)
    shifts: dict = {}
    for j in order:
        for i in range(base.m0):
            for _ in range(int(b[i, j])):
                used = set(shifts.get((i, j), ()))
                dist = _check_distances(base, ell, placed, j)
                # edge with shift s joins variable (j, 0) to check (i, -s mod ell)
                cand = np.array([s for s in range(ell) if s not in used])
                if cand.size == 0 and allow_collapse:
                    cand = np.arange(ell)
                if cand.size == 0:
                    raise UnliftableError(
                        f"entry ({i}, {j}) has {b[i, j]} parallel edges but ell={ell}"
                    )
                # cycle through the new edge: check-to-(j, 0) path plus the edge itself
                short, counts = _cycle_profile(placed, (i, j), cand, ell)
                local = np.minimum(dist[i, (-cand) % ell] + 1, short)
                keep = local == local.max()
                # among equally long girths, fewest short cycles through the new edge
                for length in sorted(counts):
                    c = counts[length]
                    keep &= c == c[keep].min()
                best = cand[keep]
                if b[i, j] % 2 == 0 and len(used) == b[i, j] - 1:
                    period = _pairing_period(shifts[(i, j)], best, ell)
                    best = best[period == period.min()]
                s = int(rng.choice(best))
                placed.append((i, j, s))
                shifts[(i, j)] = shifts.get((i, j), ()) + (s,)
    return shifts


def lift(base: BaseMatrix, ell: int, seed: int = 0, retries: int = MAX_SEED_RETRIES,
         allow_collapse: bool = False) -> LiftedCode:
    """Lift ``base`` by ``ell`` with circulant PEG; retries seeds until H2 is invertible.

    ``allow_collapse`` admits ``ell`` smaller than an entry: shifts then repeat
    and coinciding circulants cancel mod 2, so ``H`` no longer has the base
    degrees.  Only meant for tiny exhaustive-search codes.
    """
    problems = validate(base)
    if problems:
        raise ValueError("invalid base matrix: " + "; ".join(problems))
    if ell < 1:
        raise ValueError("lifting factor must be positive")
    if ell == 1 and (base.entries > 1).any() and not allow_collapse:
        raise UnliftableError("parallel edges cannot be lifted with ell=1")
    even = [j for j in range(base.h0, base.n0_total) if not (base.entries[:, j] % 2).any()]
    if even:
        # every lifted row of such a block holds an even number of ones, so its columns sum to zero
        raise UnliftableError(f"H2 is singular for every lift: columns {even} have only even entries")
    for attempt in range(retries):
        s = seed + attempt
        shifts = _peg_shifts(base, ell, np.random.default_rng(s), allow_collapse)
        code = LiftedCode(base, ell, shifts, s, requested_seed=seed)
        try:
            gen = compute_generator(code)
        except np.linalg.LinAlgError:
            continue
        return LiftedCode(base, ell, shifts, s, requested_seed=seed, _generator=gen)
    raise UnliftableError(f"H2 singular for all {retries} seeds starting at {seed}")


def compute_generator(code: LiftedCode) -> np.ndarray:
    """Dense ``h x n`` generator ``G`` with ``c = v G``  iff  ``c H2^T = v H1^T``.

    Solves ``H2 G^T = H1`` by elimination; raises ``LinAlgError`` for singular H2.
    """
    H1 = code.H1.toarray()
    H2 = code.H2.toarray()
    return np.ascontiguousarray(gf2.solve_right(H2, H1).T)


def girth(H) -> int:
    """Length of the shortest cycle of the Tanner graph of ``H``; ``NO_CYCLE`` for forests."""
    H = sparse.csr_matrix(H)
    m, n = H.shape
    # bipartite graph: variables 0..n-1, checks n..n+m-1
    Hc = H.tocsc()
    best = NO_CYCLE
    for v in range(n):
        best = min(best, _shortest_cycle_from(v, H, Hc, n, best))
    return best


def _shortest_cycle_from(start, H, Hc, n, bound):
    depth = {start: 0}
    parent = {start: -1}
    frontier = [start]
    best = bound
    d = 0
    while frontier and 2 * d + 1 < best:
        nxt = []
        for u in frontier:
            if u < n:
                nbrs = n + Hc.indices[Hc.indptr[u] : Hc.indptr[u + 1]]
            else:
                r = u - n
                nbrs = H.indices[H.indptr[r] : H.indptr[r + 1]]
            for w in nbrs:
                w = int(w)
                if w == parent[u]:
                    continue
                if w in depth:
                    best = min(best, depth[u] + depth[w] + 1)
                else:
                    depth[w] = d + 1
                    parent[w] = u
                    nxt.append(w)
        frontier = nxt
        d += 1
    return best


def lifted_girth(code: LiftedCode) -> int:
    """Girth using the circulant symmetry: BFS only from copy 0 of each variable type."""
    H = code.H
    Hc = H.tocsc()
    best = NO_CYCLE
    for j in range(code.base.n0_total):
        best = min(best, _shortest_cycle_from(j * code.ell, H, Hc, H.shape[1], best))
    return best
