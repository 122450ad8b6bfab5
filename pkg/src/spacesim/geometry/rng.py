"""xoshiro256** generator with splitmix64 seeding.

Pure integer arithmetic so the stream is identical on every platform. Scene
seeds are derived with ``mix(dataset_seed, index)``; the generator state is
filled from a seed by four splitmix64 steps (the reference seeding rule).
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


def splitmix64(x: int) -> tuple[int, int]:
    """One splitmix64 step. Returns (next_state, output)."""
    x = (x + _GOLDEN) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return x, z ^ (z >> 31)


def mix(seed: int, index: int) -> int:
    """Derive a child seed from a parent seed and an integer index."""
    _, a = splitmix64(seed & MASK64)
    _, b = splitmix64((a ^ ((index * _GOLDEN) & MASK64)) & MASK64)
    return b


class Rng:
    """xoshiro256** (Blackman & Vigna). Single owner; never share across threads."""

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        x = self.seed
        state = []
        for _ in range(4):
            x, out = splitmix64(x)
            state.append(out)
        self._s = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection on the top bits."""
        if n <= 0:
            raise ValueError("n must be positive")
        bits = max(1, (n - 1).bit_length())
        while True:
            r = self.next_u64() >> (64 - bits)
            if r < n:
                return r

    def choice(self, seq):
        return seq[self.randbelow(len(seq))]

    def state(self) -> tuple[int, int, int, int]:
        return tuple(self._s)
