"""Contraction profiles and the triangular Lipschitz weight tables they generate.

A contraction profile is a nonnegative summable sequence (a_1, a_2, ...) with
sum strictly below 1 that dominates the expected one-step sensitivity of an
infinite-memory update map.  From a profile and a horizon n we build the
triangular weight table

    a_0(i) = 1,
    a_1(i) = 1 + a_i,
    a_{k+1}(i) = a_k(i) + a_k(k) * a_{i-k},   k in [1, n-1], i in [k+1, n-1],

whose diagonal entries a_k(k) weigh the conditional-expectation increments of
separately Lipschitz functionals.  The diagonal also satisfies the closed
convolution identity

    a_k(k) = 1 + a_k + sum_{l=1}^{k-1} a_l(l) * a_{k-l}.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from .errors import ProfileError

_log = logging.getLogger(__name__)

# Strictness margin for the contraction requirement sum(a_i) < 1.
CONTRACTION_MARGIN = 1e-12


@dataclass(frozen=True)
class GeometricTail:
    """Geometric continuation a_i = a_L * ratio**(i - L) for i >= first_index.

    Continues the last explicit coefficient, so first_index must be L + 1
    where L is the explicit length.
    """

    ratio: float
    first_index: int


@dataclass(frozen=True)
class PowerTail:
    """Polynomial tail a_i = constant * i**(-exponent) for i >= first_index."""

    exponent: float
    constant: float
    first_index: int


@dataclass(frozen=True)
class ContractionProfile:
    """Nonnegative coefficient sequence with sum < 1.

    explicit_coeffs holds a_1..a_L; beyond L the tail (if any) supplies the
    values lazily, so no truncation error enters the table recursion.
    total_sum and max_coeff are computed at construction and cached.
    """

    explicit_coeffs: tuple[float, ...]
    tail: GeometricTail | PowerTail | None = None
    experimental: bool = False
    total_sum: float = field(init=False)
    max_coeff: float = field(init=False)

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.explicit_coeffs)
        object.__setattr__(self, "explicit_coeffs", coeffs)
        if any(a < 0 or not math.isfinite(a) for a in coeffs):
            raise ProfileError(f"coefficients must be finite and >= 0, got {coeffs}")
        tail_sum, tail_head = self._validate_tail()
        total = math.fsum(coeffs) + tail_sum
        if not total < 1.0 - CONTRACTION_MARGIN:
            raise ProfileError(
                f"profile sum {total} violates the strict contraction "
                f"requirement sum(a_i) < 1 - {CONTRACTION_MARGIN:g}"
            )
        object.__setattr__(self, "total_sum", total)
        object.__setattr__(self, "max_coeff", max([0.0, *coeffs, tail_head]))

    def _validate_tail(self):
        """Returns (tail sum, largest tail value)."""
        tail = self.tail
        L = len(self.explicit_coeffs)
        if tail is None:
            return 0.0, 0.0
        if tail.first_index != L + 1:
            raise ProfileError(
                f"tail must continue the explicit list: first_index "
                f"{tail.first_index} != {L + 1}"
            )
        if isinstance(tail, GeometricTail):
            if L == 0:
                raise ProfileError("geometric tail needs at least one explicit coefficient")
            if not 0.0 <= tail.ratio < 1.0:
                raise ProfileError(f"geometric ratio must be in [0, 1), got {tail.ratio}")
            head = self.explicit_coeffs[-1] * tail.ratio
            return head / (1.0 - tail.ratio) if tail.ratio > 0 else 0.0, head
        if isinstance(tail, PowerTail):
            if tail.exponent <= 1.0:
                raise ProfileError("power tail needs exponent > 1 for a finite sum")
            if tail.constant < 0:
                raise ProfileError("power tail constant must be >= 0")
            # Hurwitz zeta gives the closed-form tail sum.
            total = tail.constant * float(zeta(tail.exponent, tail.first_index))
            head = tail.constant * tail.first_index ** (-tail.exponent)
            return total, head
        raise ProfileError(f"unknown tail type {type(tail).__name__}")

    # -- coefficient access -------------------------------------------------

    def coeff(self, i: int) -> float:
        """a_i for any i >= 1 (tail evaluated in closed form)."""
        if i < 1:
            raise ProfileError(f"coefficient index must be >= 1, got {i}")
        L = len(self.explicit_coeffs)
        if i <= L:
            return self.explicit_coeffs[i - 1]
        if self.tail is None:
            return 0.0
        if isinstance(self.tail, GeometricTail):
            return self.explicit_coeffs[-1] * self.tail.ratio ** (i - L)
        return self.tail.constant * float(i) ** (-self.tail.exponent)

    def base_coefficients(self, m: int) -> np.ndarray:
        """Vector (a_1, ..., a_m)."""
        return np.array([self.coeff(i) for i in range(1, m + 1)], dtype=float)

    def is_nonincreasing(self) -> bool:
        seq = list(self.explicit_coeffs)
        if self.tail is not None and self.explicit_coeffs:
            seq.append(self.coeff(len(self.explicit_coeffs) + 1))
        return all(a >= b for a, b in zip(seq, seq[1:]))

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_coeffs(cls, coeffs) -> "ContractionProfile":
        return cls(tuple(coeffs))

    @classmethod
    def zeros(cls) -> "ContractionProfile":
        return cls(())

    @classmethod
    def geometric(cls, first: float, ratio: float) -> "ContractionProfile":
        """Full geometric profile a_i = first * ratio**(i-1)."""
        return cls((first,), GeometricTail(ratio=ratio, first_index=2))

    @classmethod
    def power(cls, constant: float, exponent: float) -> "ContractionProfile":
        """Pure power profile a_i = constant * i**(-exponent)."""
        return cls((), PowerTail(exponent=exponent, constant=constant, first_index=1))


@dataclass(frozen=True)
class LipschitzTable:
    """Triangular array a_k(i), k in [0, n-1], i in [k, n-1].

    table[k, i] is a_k(i); entries below the diagonal are NaN.  diagonal[k]
    is a_k(k).  Immutable after construction.
    """

    horizon: int
    table: np.ndarray
    diagonal: np.ndarray

    def weight(self, k: int, i: int) -> float:
        """a_k(i); valid for 0 <= k <= i <= n-1."""
        if not (0 <= k <= i < self.horizon):
            raise ProfileError(f"weight index (k={k}, i={i}) outside horizon {self.horizon}")
        return float(self.table[k, i])

    @property
    def reversed_diagonal(self) -> np.ndarray:
        """Weights (a_{n-k}(n-k))_{k=1..n}, the per-increment scales."""
        return self.diagonal[::-1]


def build_lipschitz_table(profile: ContractionProfile, n: int) -> LipschitzTable:
    """Builds the weight table for horizon n via the row recursion.

    Only a_1..a_{n-1} of the profile are ever needed; they are materialized
    once (tail values from the closed form).
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ProfileError(f"horizon must be a positive integer, got {n!r}")
    n = int(n)
    a = profile.base_coefficients(n - 1)

    rows = np.full((n, n), np.nan)
    rows[0, :] = 1.0
    if n >= 2:
        rows[1, 1:] = 1.0 + a
        for k in range(1, n - 1):
            rows[k + 1, k + 1:] = rows[k, k + 1:] + rows[k, k] * a[: n - 1 - k]
    diagonal = np.ascontiguousarray(np.diagonal(rows))
    diagonal.setflags(write=False)
    rows.setflags(write=False)

    if profile.is_nonincreasing():
        cap = diagonal_uniform_bound(profile)
        if np.any(np.diff(diagonal) < -1e-12) or np.any(diagonal > cap * (1 + 1e-12)):
            raise ProfileError(
                "diagonal monotonicity/uniform-bound check failed for a "
                "non-increasing profile; this indicates an internal error"
            )
    else:
        _log.debug("profile not non-increasing; diagonal monotonicity check skipped")

    return LipschitzTable(horizon=n, table=rows, diagonal=diagonal)


def diagonal_uniform_bound(profile: ContractionProfile) -> float:
    """(1 + max_i a_i) / (1 - sum_i a_i).

    Uniform cap on the table diagonal for non-increasing profiles.
    """
    return (1.0 + profile.max_coeff) / (1.0 - profile.total_sum)


def diagonal_convolution_gap(table: LipschitzTable, profile: ContractionProfile) -> float:
    """Max relative gap of the diagonal against its convolution identity.

    Checks a_k(k) = 1 + a_k + sum_{l=1}^{k-1} a_l(l) a_{k-l} for every k in
    [1, n-1] and returns the worst relative discrepancy (0 for n <= 1).
    """
    n = table.horizon
    if n <= 1:
        return 0.0
    a = profile.base_coefficients(n - 1)
    d = table.diagonal
    worst = 0.0
    for k in range(1, n):
        expected = 1.0 + a[k - 1]
        if k >= 2:
            expected += float(np.dot(d[1:k], a[k - 2::-1]))
        worst = max(worst, abs(d[k] - expected) / expected)
    return worst
