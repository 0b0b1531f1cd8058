"""Deterministic PRNG used everywhere randomness is needed.

SplitMix64 (Steele, Lea & Flood 2014) with the standard constants:

    state    += 0x9E3779B97F4A7C15            (golden-ratio increment)
    z  = state
    z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)

All arithmetic is modulo 2**64.  Uniform doubles take the top 53 bits of
the output word divided by 2**53.  The algorithm is fixed so that any
reimplementation (in any language) seeded identically reproduces the
same stream bit for bit; nothing here depends on Python's `random` or
numpy's generators.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """64-bit shift-based generator; one instance = one reproducible stream."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def choice_index(self, cumulative: list[float]) -> int:
        """Sample an index from a categorical distribution.

        `cumulative` is the inclusive running sum of the probability
        vector; its last entry should be ~1.  Returns the first index
        whose cumulative value exceeds the drawn uniform.
        """
        u = self.random()
        for i, c in enumerate(cumulative):
            if u < c:
                return i
        return len(cumulative) - 1

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle driven by this stream."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            items[i], items[j] = items[j], items[i]
