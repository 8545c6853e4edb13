"""Deterministic 64-bit PRNG for dataset expansion.

xorshift64* with the state initialized through one splitmix64 scramble so
that any seed (including 0) is usable.  The exact algorithm is documented in
docs/prng.md; every implementation of the dataset expander must reproduce
this stream bit-for-bit so a seed fully determines the generated data.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1


def _splitmix64(value: int) -> int:
    value = (value + 0x9E3779B97F4A7C15) & MASK64
    value = ((value ^ (value >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    value = ((value ^ (value >> 27)) * 0x94D049BB133111EB) & MASK64
    return (value ^ (value >> 31)) & MASK64


class XorShift64Star:
    """xorshift64* stream: x ^= x>>12; x ^= x<<25; x ^= x>>27; out = x * M."""

    MULTIPLIER = 0x2545F4914F6CDD1D

    def __init__(self, seed: int):
        self.state = _splitmix64(seed & MASK64)
        if self.state == 0:  # xorshift state must be nonzero
            self.state = self.MULTIPLIER

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x = (x ^ (x << 25)) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * self.MULTIPLIER) & MASK64

    def below(self, bound: int) -> int:
        """Uniform-ish integer in [0, bound) by modulo reduction.

        The modulo bias is below 2**-50 for the bounds used here and the
        reduction keeps the stream identical across implementations.
        """
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound

    def choice(self, items):
        return items[self.below(len(items))]

    def shuffle(self, items: list) -> list:
        """In-place Fisher-Yates shuffle; returns the list for convenience."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items
