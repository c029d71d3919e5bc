"""Portable, documented pseudo-random generator for shuffles.

xorshift64* (Vigna, 2016) with the state seeded through one splitmix64 step,
so seed 0 is legal and nearby seeds decorrelate::

    seed:  z = (seed + 0x9E3779B97F4A7C15) mod 2^64
           z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2^64
           z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2^64
           state = z ^ (z >> 31)           (replaced by 1 if it is 0)
    next:  x ^= x >> 12; x ^= x << 25 (mod 2^64); x ^= x >> 27
           return x * 0x2545F4914F6CDD1D mod 2^64

Bounded integers use rejection against ``2^64 - (2^64 mod n)`` so they are
unbiased; ``permutation`` is a Fisher-Yates pass from the last index down.
Any language with 64-bit unsigned arithmetic reproduces these streams.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1


def splitmix64(seed: int) -> int:
    z = (seed + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed: int):
        if not 0 <= seed <= MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.state = splitmix64(seed) or 1

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def uniform(self) -> float:
        """Uniform float in ``[0, 1)`` with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def permutation(self, n: int) -> list[int]:
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm


def permutation(n: int, seed: int) -> list[int]:
    return XorShift64Star(seed).permutation(n)
