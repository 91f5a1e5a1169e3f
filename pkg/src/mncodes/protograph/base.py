"""Base matrices of protograph MacKay-Neal mother codes.

A base matrix ``B = [B1 | B2]`` has ``m0`` rows (check-node types) and
``h0 + n0`` columns; the first ``h0`` columns are the punctured variable-node
types fed by the distribution matcher.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

MAX_PARALLEL_EDGES = 3


@dataclass(frozen=True, eq=False)
class BaseMatrix:
    entries: np.ndarray
    h0: int
    max_parallel_edges: int = MAX_PARALLEL_EDGES

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError("base matrix must be two-dimensional")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    def __eq__(self, other):
        if not isinstance(other, BaseMatrix):
            return NotImplemented
        return self.h0 == other.h0 and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.h0, self.entries.shape, self.entries.tobytes()))

    def __repr__(self):
        rows = "; ".join(" ".join(str(v) for v in row) for row in self.entries)
        return f"BaseMatrix([{rows}], h0={self.h0})"

    @property
    def m0(self) -> int:
        return self.entries.shape[0]

    @property
    def n0_total(self) -> int:
        return self.entries.shape[1]

    @property
    def n0(self) -> int:
        return self.n0_total - self.h0

    @property
    def b1(self) -> np.ndarray:
        return self.entries[:, : self.h0]

    @property
    def b2(self) -> np.ndarray:
        return self.entries[:, self.h0 :]

    @property
    def inner_rate(self) -> Fraction:
        return Fraction(self.h0, self.n0)

    @property
    def mother_rate(self) -> Fraction:
        return Fraction(self.h0, self.n0_total)

    @property
    def column_degrees(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    @property
    def row_degrees(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def to_text(self) -> str:
        lines = [f"{self.m0} {self.n0_total} {self.h0}"]
        lines += [" ".join(str(int(v)) for v in row) for row in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BaseMatrix":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows:
            raise ValueError("empty base matrix file")
        try:
            m0, n_total, h0 = (int(t) for t in rows[0])
            body = [[int(t) for t in r] for r in rows[1:]]
        except ValueError as exc:
            raise ValueError(f"malformed base matrix: {exc}") from None
        if len(body) != m0 or any(len(r) != n_total for r in body):
            raise ValueError(f"malformed base matrix: expected {m0} rows of {n_total} integers")
        return cls(np.array(body, dtype=np.int64), h0)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "BaseMatrix":
        return cls.from_text(Path(path).read_text())


def validate(base: BaseMatrix) -> list[str]:
    """Return a list of human-readable violations; empty when the matrix is usable."""
    problems = []
    b = base.entries
    if base.h0 < 1:
        problems.append(f"h0 must be >= 1, got {base.h0}")
    if base.n0 < 1:
        problems.append(f"need at least one transmitted column, got n0={base.n0}")
    if base.m0 != base.n0:
        problems.append(f"H2 part must be square: m0={base.m0} but n0={base.n0}")
    if (b < 0).any():
        problems.append("negative entries")
    for i, j in zip(*np.nonzero(b > base.max_parallel_edges)):
        problems.append(
            f"entry ({i}, {j}) = {b[i, j]} exceeds max parallel edges {base.max_parallel_edges}"
        )
    for j in np.flatnonzero(b.sum(axis=0) == 0):
        problems.append(f"column {j} is all-zero")
    for i in np.flatnonzero(b.sum(axis=1) < 2):
        problems.append(f"row {i} has degree {b[i].sum()} < 2")
    return problems


PRESETS = {
    "b12": BaseMatrix(
        np.array(
            [
                [1, 0, 1, 1, 0, 0],
                [0, 1, 0, 3, 0, 1],
                [2, 0, 1, 1, 1, 0],
                [1, 2, 1, 2, 0, 0],
            ]
        ),
        h0=2,
    ),
    "b23": BaseMatrix(
        np.array(
            [
                [1, 0, 0, 3, 1],
                [1, 1, 0, 3, 0],
                [1, 2, 2, 1, 0],
            ]
        ),
        h0=2,
    ),
}


def preset(name: str) -> BaseMatrix:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
