"""Project PRNG: xoshiro256** seeded through splitmix64.

The generator is pinned here, rather than delegated to a library, so that
every random draw in the pipeline (parameter sampling, dataset splits,
weight initialization, minibatch shuffles) reproduces bit-for-bit from the
integers stored in a manifest, independent of numpy version or platform.

Conventions, all of which downstream code relies on:
  * seeding: the four 64-bit state words are the first four outputs of a
    splitmix64 chain started at the seed.
  * doubles: ``(next_u64() >> 11) * 2**-53`` giving uniforms on [0, 1).
  * shuffles: Fisher-Yates from the top index down, with
    ``j = floor(u * (i + 1))``.
  * sub-streams: ``derive_seed(master, k)`` is the (k+1)-th output of a
    splitmix64 chain started at the master seed.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_DOUBLE_SCALE = 2.0 ** -53


def _splitmix64_step(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Return the sub-seed for stream `index` (0-based) of a master seed."""
    if index < 0:
        raise ValueError("stream index must be >= 0")
    state = master_seed & _MASK64
    out = 0
    for _ in range(index + 1):
        state, out = _splitmix64_step(state)
    return out


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """xoshiro256** with the reference update rule, on Python integers."""

    def __init__(self, seed: int):
        state = seed & _MASK64
        words = []
        for _ in range(4):
            state, word = _splitmix64_step(state)
            words.append(word)
        self._s = words

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def next_double(self) -> float:
        return (self.next_u64() >> 11) * _DOUBLE_SCALE

    def uniform(self, lo: float, hi: float) -> float:
        return lo + self.next_double() * (hi - lo)

    def uniforms(self, n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            out[i] = lo + self.next_double() * (hi - lo)
        return out

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle; draw order is documented above."""
        for i in range(len(items) - 1, 0, -1):
            j = int(self.next_double() * (i + 1))
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> list[int]:
        ids = list(range(n))
        self.shuffle(ids)
        return ids


PRNG_NAME = "xoshiro256** (splitmix64-seeded)"
