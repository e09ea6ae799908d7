"""Exact inclusion-exclusion sums over the prime factors of a squarefree n.

The divisor sums sum(1/d for d | n, omega(d) = r) are the elementary
symmetric polynomials e_r of the prime reciprocals, so everything here is
built on one O(k * r_max) dynamic program over exact rationals.

Tail convention
---------------
``truncated_and_tail_T`` splits the alternating sum at depth s into

    T_s  = sum_{r=1..s}   (-1)^r e_r
    tail = sum_{r=s+1..k} (-1)^r e_r

so that T_s + tail = P - 1 holds exactly (P is the Euler product, whose
alternating expansion contributes e_0 = 1 at r = 0).  The tail sum is the
quantity the analytic chain bounds and the one the certificate in
``criterion.stevens_Q`` subtracts from P.  The other conceivable remainder,
T_s - P, equals -1 - tail and produces false certificates; it is exposed
only through the CLI debug flag ``--show-both-tail-conventions``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import ResourceLimitError
from .primes import is_prime

EXACT_MODE = "exact-rational"
DOUBLE_MODE = "double-precision"

#: 2^k subsets is the enumeration oracle's hard ceiling.
MAX_ENUMERATION_K = 20


@dataclass(frozen=True)
class FactorBasis:
    """Distinct prime factors of a squarefree n, strictly ascending.

    Duplicate primes are rejected rather than collapsed: callers reduce n to
    its radical themselves, keeping g(n) = g(rad(n)) explicit at the call
    site.
    """

    primes: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.primes:
            raise ValueError("a factor basis needs at least one prime")
        if any(b <= a for a, b in zip(self.primes, self.primes[1:])):
            raise ValueError(
                f"primes must be strictly increasing and distinct, got {self.primes}"
            )
        for p in self.primes:
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")

    @classmethod
    def from_ints(cls, values) -> "FactorBasis":
        return cls(tuple(sorted(int(v) for v in values)))

    @property
    def k(self) -> int:
        return len(self.primes)

    @property
    def product(self) -> int:
        return math.prod(self.primes)


@dataclass(frozen=True)
class SymmetricSums:
    """e[r] = sum(1/d for squarefree d | n with omega(d) = r), r = 0..r_max.

    P is the Euler product prod(1 - 1/p); when all k values are present it
    equals the alternating sum of the e[r].  In double-precision mode the
    entries are floats (plotting convenience only; certificates always use
    exact mode).
    """

    e: tuple
    P: Fraction | float
    mode: str


@dataclass(frozen=True)
class TruncationParts:
    T_s: Fraction
    tail: Fraction


def euler_product_P(basis: FactorBasis) -> Fraction:
    """prod(1 - 1/p) over the basis, exactly."""
    num = 1
    den = 1
    for p in basis.primes:
        num *= p - 1
        den *= p
    return Fraction(num, den)


def elementary_symmetric_prefix(
    basis: FactorBasis, r_max: int, mode: str = EXACT_MODE
) -> SymmetricSums:
    """Dynamic program for e[0..r_max] in O(k * r_max) rational operations."""
    if not 0 <= r_max <= basis.k:
        raise ValueError(f"r_max={r_max} outside [0, k={basis.k}]")
    if mode not in (EXACT_MODE, DOUBLE_MODE):
        raise ValueError(f"unknown mode {mode!r}")
    exact = mode == EXACT_MODE
    e = [Fraction(0) if exact else 0.0] * (r_max + 1)
    e[0] = Fraction(1) if exact else 1.0
    for count, p in enumerate(basis.primes, start=1):
        x = Fraction(1, p) if exact else 1.0 / p
        for r in range(min(count, r_max), 0, -1):
            e[r] += x * e[r - 1]
    P = euler_product_P(basis)
    return SymmetricSums(e=tuple(e), P=P if exact else float(P), mode=mode)


def divisor_sum_by_omega(basis: FactorBasis, r: int) -> Fraction:
    """Independent oracle for e[r]: enumerate every r-subset of the primes."""
    if basis.k > MAX_ENUMERATION_K:
        raise ResourceLimitError(
            f"subset enumeration is refused for k={basis.k} > {MAX_ENUMERATION_K} "
            f"(2^k subsets)"
        )
    if not 0 <= r <= basis.k:
        raise ValueError(f"r={r} outside [0, k={basis.k}]")
    total = Fraction(0)
    for combo in combinations(basis.primes, r):
        total += Fraction(1, math.prod(combo))
    return total


def truncated_and_tail_T(basis: FactorBasis, s: int) -> TruncationParts:
    """Split the alternating divisor sum at depth s (see module docstring).

    The tail is recovered from the exact identity T_s + tail = P - 1, so only
    e[0..s] is ever materialised; this keeps large-k tails cheap.
    """
    if not 1 <= s <= basis.k:
        raise ValueError(f"s={s} outside [1, k={basis.k}]")
    sums = elementary_symmetric_prefix(basis, s)
    T_s = Fraction(0)
    for r in range(1, s + 1):
        T_s += sums.e[r] if r % 2 == 0 else -sums.e[r]
    tail = sums.P - 1 - T_s
    return TruncationParts(T_s=T_s, tail=tail)
