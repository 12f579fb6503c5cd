"""Deterministic 64-bit random streams for reproducible fixtures.

Graph sampling and dataset partitioning use a splitmix64 stream directly so
that golden values are stable across platforms and easy to re-derive in any
language.  Heavier draws (Gaussian features) go through numpy generators
seeded from the same stream.

splitmix64 (public-domain constants):

    state <- state + 0x9E3779B97F4A7C15   (mod 2^64)
    z <- state
    z <- (z xor (z >> 30)) * 0xBF58476D1CE4E5B9   (mod 2^64)
    z <- (z xor (z >> 27)) * 0x94D049BB133111EB   (mod 2^64)
    output z xor (z >> 31)

Named sub-streams are derived as ``seed XOR fnv1a64(tag)`` so that changing
one component's seed never perturbs another component's draws.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(tag: str) -> int:
    """64-bit FNV-1a hash of an ASCII tag."""
    h = _FNV_OFFSET
    for byte in tag.encode("ascii"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


class SplitMix64:
    """Minimal splitmix64 stream over a 64-bit state."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_double(self) -> float:
        """Uniform double in [0, 1) using the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_below(self, n: int) -> int:
        """Unbiased uniform integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = _MASK64 - (_MASK64 + 1) % n
        while True:
            u = self.next_u64()
            if u <= limit:
                return u % n

    def shuffle(self, items: np.ndarray) -> None:
        """In-place Fisher-Yates shuffle driven by this stream."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]


def substream(seed: int, tag: str) -> SplitMix64:
    """Named sub-stream of a global seed."""
    return SplitMix64((seed & _MASK64) ^ fnv1a64(tag))


def numpy_rng(seed: int, tag: str) -> np.random.Generator:
    """numpy generator seeded from the named sub-stream of ``seed``."""
    return np.random.default_rng(substream(seed, tag).next_u64())
