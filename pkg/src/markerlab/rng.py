"""Portable seeded randomness.

Every stochastic stage in the pipeline (corpus splitting, span corruption,
k-means++ seeding) draws from SplitMix64, a 64-bit counter-based generator.
The algorithm is fixed here, rather than delegated to a platform RNG, so that
a given seed produces identical outputs on every machine and in any
reimplementation.

SplitMix64 (Steele, Lea & Flood 2014): the state advances by the constant
0x9E3779B97F4A7C15 per draw and the raw counter value is scrambled by two
xor-shift-multiply rounds. Substreams are derived by hashing a string label
(FNV-1a 64) into the seed and scrambling once, which keeps per-dialogue or
per-marker work order-independent.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


class SplitMix64:
    """Deterministic 64-bit generator with a fixed, documented algorithm."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix(self._state)

    def next_float(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_uint64() >> 11) * (2.0 ** -53)

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (unbiased)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % n)
        while True:
            v = self.next_uint64()
            if v < limit:
                return v % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]


def derive_seed(seed: int, label: str) -> int:
    """Substream seed for (seed, label), stable across platforms."""
    return _mix((seed & _MASK64) ^ _fnv1a64(label.encode("utf-8")))
