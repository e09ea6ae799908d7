"""Prime generation, on-disk caching, and the analytic constants attached to p_k.

The reciprocal-sum upper bound and the Mertens-type lower bound on
prod(1 - 1/p_i) are explicit inequalities valid for k > 61; every operation
that evaluates them refuses smaller k instead of extrapolating.
"""

from __future__ import annotations

import math
import os
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import ResourceLimitError

EULER_GAMMA = 0.57721566490153286061
#: Mertens-type constant in the reciprocal-sum bound, kept exactly as the
#: explicit estimates state it (it is itself part of the claims checked here).
MERTENS_B = 0.261498
#: Smallest k for which the explicit reciprocal-sum / product estimates hold.
MIN_K = 62

DEFAULT_MEMORY_BUDGET = 2**31  # bytes of prime storage allowed per table

_CACHE_MAGIC = b"JPT1"  # bump the digit when the payload layout changes
_CACHE_HEADER = struct.Struct("<4sQQI")  # magic, limit (u64 LE), count, crc32
_SIEVE_WINDOW = 1 << 22

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for every n below 3.3e24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeTable:
    """Immutable ascending prime table with prefix sums of 1/p.

    ``recip_prefix[k]`` is sum(1/p_i for i in 1..k); entry 0 is 0.0.
    Safe to share across workers: both arrays are flagged read-only.
    """

    limit: int
    primes: np.ndarray
    recip_prefix: np.ndarray

    def __post_init__(self) -> None:
        self.primes.setflags(write=False)
        self.recip_prefix.setflags(write=False)

    @property
    def count(self) -> int:
        return int(self.primes.size)


@dataclass(frozen=True)
class AnalyticConstants:
    """Per-k record of p_k and the explicit-estimate constants.

    c_k = exp(B + 1/(2 ln^2 p_k)) and d_k = 2 ln^2 p_k / (2 ln^2 p_k - 1)
    both decrease strictly in k; mertens_lower_P = 1/(e^gamma d_k ln p_k)
    is the certified lower bound on prod(1 - 1/p_i) for i <= k.
    """

    k: int
    p_k: int
    c_k: float
    d_k: float
    mertens_lower_P: float


@dataclass(frozen=True)
class ReciprocalSumCheck:
    sum: float
    rs_bound: float
    holds: bool


def _estimate_table_bytes(limit: int) -> int:
    # primes (int64) + recip prefix (float64) + sieve window, overcounted ~15%
    approx_count = int(1.15 * limit / max(math.log(limit) - 1.1, 1.0)) + 16
    return 16 * approx_count + _SIEVE_WINDOW + math.isqrt(limit)


def _plain_sieve(limit: int) -> np.ndarray:
    """Simple bytearray sieve; used for base primes up to sqrt(limit)."""
    flags = bytearray(b"\x01") * (limit + 1)
    flags[0:2] = b"\x00\x00"
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            start = p * p
            flags[start :: p] = b"\x00" * ((limit - start) // p + 1)
    return np.flatnonzero(np.frombuffer(bytes(flags), dtype=np.uint8)).astype(np.int64)


def _segmented_sieve(limit: int) -> np.ndarray:
    base = _plain_sieve(max(math.isqrt(limit), 2))
    chunks = []
    for lo in range(2, limit + 1, _SIEVE_WINDOW):
        hi = min(lo + _SIEVE_WINDOW, limit + 1)
        mask = np.ones(hi - lo, dtype=bool)
        for p in base.tolist():
            if p * p >= hi:
                break
            start = max(p * p, ((lo + p - 1) // p) * p)
            if start < hi:
                mask[start - lo :: p] = False
        chunks.append(np.flatnonzero(mask).astype(np.int64) + lo)
    return np.concatenate(chunks)


def _recip_prefix(primes: np.ndarray) -> np.ndarray:
    """Prefix sums of 1/p with Neumaier compensation (error ~1e-16 total)."""
    out = np.empty(primes.size + 1, dtype=np.float64)
    out[0] = 0.0
    total = 0.0
    comp = 0.0
    for i, p in enumerate(primes.tolist(), start=1):
        x = 1.0 / p
        t = total + x
        if abs(total) >= abs(x):
            comp += (total - t) + x
        else:
            comp += (x - t) + total
        total = t
        out[i] = total + comp
    return out


def default_cache_dir() -> Path:
    env = os.environ.get("JACOBSTHAL_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "jacobsthal"


def _cache_path(cache_dir: Path, limit: int) -> Path:
    return cache_dir / f"primes-{limit:d}.jpt"


def _write_cache(path: Path, limit: int, primes: np.ndarray) -> None:
    deltas = np.diff(primes, prepend=np.int64(0)).astype("<u4")
    payload = deltas.tobytes()
    header = _CACHE_HEADER.pack(_CACHE_MAGIC, limit, primes.size, zlib.crc32(payload))
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_bytes(header + payload)
    os.replace(tmp, path)


def _read_cache(path: Path, limit: int) -> np.ndarray | None:
    """Return the cached primes, or None on any header/checksum mismatch."""
    try:
        data = path.read_bytes()
    except OSError:
        return None
    if len(data) < _CACHE_HEADER.size:
        return None
    magic, lim, count, crc = _CACHE_HEADER.unpack_from(data)
    payload = data[_CACHE_HEADER.size :]
    if (
        magic != _CACHE_MAGIC
        or lim != limit
        or len(payload) != 4 * count
        or zlib.crc32(payload) != crc
    ):
        return None
    return np.cumsum(np.frombuffer(payload, dtype="<u4"), dtype=np.int64)


def build_prime_table(
    limit: int,
    *,
    cache_dir: str | Path | None = None,
    use_cache: bool = True,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> PrimeTable:
    """Sieve (or reload from cache) all primes up to ``limit``.

    The cache file is regenerated, not trusted, whenever its magic, limit,
    count, or checksum disagrees with what is expected.
    """
    if limit < 2:
        raise ValueError(f"limit={limit}: no primes exist below 2")
    est = _estimate_table_bytes(limit)
    if est > memory_budget:
        raise ResourceLimitError(
            f"prime table to limit={limit} needs about {est:,} bytes, over the "
            f"memory budget of {memory_budget:,} bytes"
        )
    path = _cache_path(Path(cache_dir) if cache_dir is not None else default_cache_dir(), limit)
    primes = _read_cache(path, limit) if use_cache else None
    if primes is None:
        primes = _segmented_sieve(limit)
        if use_cache:
            _write_cache(path, limit, primes)
    return PrimeTable(limit=limit, primes=primes, recip_prefix=_recip_prefix(primes))


def nth_prime(table: PrimeTable, k: int) -> int:
    """The k-th prime, 1-indexed."""
    if k < 1 or k > table.count:
        raise IndexError(
            f"k={k} is outside this table of {table.count} primes; "
            f"rebuild with a larger limit"
        )
    return int(table.primes[k - 1])


def _require_min_k(k: int) -> None:
    if k < MIN_K:
        raise ValueError(
            f"k={k}: the explicit estimates used here are only asserted for k > 61"
        )


def constants_at_k(table: PrimeTable, k: int) -> AnalyticConstants:
    """Evaluate c_k, d_k and the Mertens-type lower bound at the k-th prime."""
    _require_min_k(k)
    p = nth_prime(table, k)
    log_p = math.log(p)
    two_log_sq = 2.0 * log_p * log_p
    c_k = math.exp(MERTENS_B + 1.0 / two_log_sq)
    d_k = two_log_sq / (two_log_sq - 1.0)
    mertens_lower = 1.0 / (math.exp(EULER_GAMMA) * d_k * log_p)
    return AnalyticConstants(k=k, p_k=p, c_k=c_k, d_k=d_k, mertens_lower_P=mertens_lower)


def reciprocal_sum_check(table: PrimeTable, k: int) -> ReciprocalSumCheck:
    """Check sum(1/p_i, i<=k) < ln(c_k ln p_k) at one k."""
    _require_min_k(k)
    consts = constants_at_k(table, k)
    s = float(table.recip_prefix[k])
    rs_bound = math.log(consts.c_k * math.log(consts.p_k))
    return ReciprocalSumCheck(sum=s, rs_bound=rs_bound, holds=s < rs_bound)


def _ratio_minus(num: int, den: int, rhs: float) -> float:
    # float-precision report of num/den - rhs without reducing the fraction
    return (num * 10**18 // den) / 1e18 - rhs


def mertens_product_sweep(
    table: PrimeTable, k_from: int = MIN_K, k_to: int | None = None
) -> Iterator[tuple[int, bool, float]]:
    """Yield (k, holds, margin) for prod(1 - 1/p_i) > mertens_lower_P.

    The product is carried as an unreduced big-integer ratio, so the
    comparison is exact; the float right-hand side is inflated by 1e-12
    relative before comparing, which absorbs its own rounding error.
    """
    if k_to is None:
        k_to = table.count
    _require_min_k(k_from)
    if k_to > table.count:
        raise IndexError(f"k_to={k_to} exceeds table of {table.count} primes")
    num = 1
    den = 1
    for i in range(1, k_to + 1):
        p = int(table.primes[i - 1])
        num *= p - 1
        den *= p
        if i >= k_from:
            rhs = constants_at_k(table, i).mertens_lower_P
            a, b = (rhs * (1.0 + 1e-12)).as_integer_ratio()
            holds = num * b > a * den
            yield i, holds, _ratio_minus(num, den, rhs)
