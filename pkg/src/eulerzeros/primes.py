"""Prime tables: sieving, membership, and counting over large ranges."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class EmptyDomainError(ValueError):
    """Raised when a prime range below 2 is requested."""


def sieve_primes(limit: int) -> np.ndarray:
    """All primes <= limit as an int64 array (Eratosthenes, odd wheel).

    Memory is one byte per odd integer up to limit, so limit = 1e8 is
    routine on a desktop.
    """
    limit = int(limit)
    if limit < 2:
        raise EmptyDomainError(f"prime sieve needs limit >= 2, got {limit}")
    if limit == 2:
        return np.array([2], dtype=np.int64)
    # odd-only sieve: index i represents 2i+1
    n_odd = (limit + 1) // 2
    mask = np.ones(n_odd, dtype=bool)
    mask[0] = False  # 1 is not prime
    for p in range(3, int(limit**0.5) + 1, 2):
        if mask[p // 2]:
            start = p * p
            mask[start // 2 :: p] = False
    odds = 2 * np.nonzero(mask)[0].astype(np.int64) + 1
    return np.concatenate(([np.int64(2)], odds))


@dataclass
class PrimeTable:
    """Sorted table of all primes up to ``limit``."""

    limit: int
    primes: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, limit: int) -> "PrimeTable":
        return cls(limit=int(limit), primes=sieve_primes(limit))

    def __len__(self) -> int:
        return len(self.primes)

    def count_below(self, x: float) -> int:
        """pi(x) restricted to the table."""
        return int(np.searchsorted(self.primes, x, side="right"))

    def in_range(self, lo: float, hi: float) -> np.ndarray:
        """Primes p with lo < p <= hi."""
        i = np.searchsorted(self.primes, lo, side="right")
        j = np.searchsorted(self.primes, hi, side="right")
        return self.primes[i:j]

    def log_primes(self) -> np.ndarray:
        return np.log(self.primes.astype(np.float64))


def is_prime_trial(n: int) -> bool:
    """Trial-division primality; used as an independent oracle in tests."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True
