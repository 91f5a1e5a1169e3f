"""Rate arithmetic: binary entropy, its inverse, and outer/inner/overall rates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from scipy.special import gammaln

_LN2 = math.log(2.0)


def binary_entropy(omega: float) -> float:
    """Binary entropy in bits. ``H_b(0) = H_b(1) = 0``."""
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"omega must lie in [0, 1], got {omega!r}")
    if omega == 0.0 or omega == 1.0:
        return 0.0
    return -omega * math.log2(omega) - (1.0 - omega) * math.log2(1.0 - omega)


def binary_entropy_inverse(r: float, tol: float = 1e-12) -> float:
    """Return the unique ``omega`` in [0, 0.5] with ``binary_entropy(omega) == r``.

    Bisection on the increasing branch; stops once the bracket is narrower
    than ``tol``.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"entropy value must lie in [0, 1], got {r!r}")
    if r == 0.0:
        return 0.0
    if r == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < r:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def log2_binomial(h: int, w: int) -> float:
    if not 0 <= w <= h:
        raise ValueError(f"need 0 <= w <= h, got h={h}, w={w}")
    return float(gammaln(h + 1) - gammaln(w + 1) - gammaln(h - w + 1)) / _LN2


def outer_rate_finite(h: int, w: int) -> float:
    """Rate ``log2 C(h, w) / h`` of a constant-composition code."""
    if h <= 0:
        raise ValueError("h must be positive")
    return log2_binomial(h, w) / h


def prior_llr(omega: float) -> float:
    """``ln((1 - omega) / omega)``, the magnitude of the prior LLR on punctured bits."""
    if not 0.0 < omega < 1.0:
        raise ValueError(f"omega must lie in (0, 1), got {omega!r}")
    return math.log((1.0 - omega) / omega)


@dataclass(frozen=True)
class RateTriple:
    outer_rate: float
    inner_rate: Fraction

    def __post_init__(self):
        if not 0.0 <= self.outer_rate <= 1.0:
            raise ValueError(f"outer rate must lie in [0, 1], got {self.outer_rate}")

    @property
    def overall_rate(self) -> float:
        return self.outer_rate * float(self.inner_rate)


def omega_for_rate(rate: float, inner_rate: float) -> float:
    """DM parameter achieving overall ``rate`` asymptotically (``H_b(omega) = R / R_I``)."""
    # R == R_I is allowed: it is the omega = 1/2 end of the family
    if not 0.0 < rate <= inner_rate * (1.0 + 1e-12):
        raise ValueError(f"rate must lie in (0, {inner_rate}], got {rate}")
    return binary_entropy_inverse(min(rate / inner_rate, 1.0))
