"""Portable seeded random streams.

Every stochastic component of the package (deck shuffles, Monte Carlo table
sampling, randomized search restarts) draws from xoshiro256** streams whose
state is filled with splitmix64, so results replicate bit-for-bit across
runs, machines, and independent re-implementations.

Stream derivation, pinned:

  base     = (seed + stream * 0x9E3779B97F4A7C15) mod 2^64
  state[k] = splitmix64 outputs 1..4 starting from ``base``

Bounded integers use plain modulo reduction of the next 64-bit output
(``next_u64() % n``); the bias is below 2^-57 for every n used here.
Shuffles are backward Fisher-Yates; table sampling is a forward partial
Fisher-Yates over the deck in canonical order (see ``sample_prefix``).
"""

from __future__ import annotations

from typing import Sequence, TypeVar

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

T = TypeVar("T")


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return state, z ^ (z >> 31)


def derive_state(seed: int, stream: int) -> tuple[int, int, int, int]:
    """Initial xoshiro256** state for (seed, stream)."""
    sm = (seed + stream * _GOLDEN) & MASK64
    out = []
    for _ in range(4):
        sm, z = _splitmix64(sm)
        out.append(z)
    return tuple(out)  # type: ignore[return-value]


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Stream:
    """Scalar xoshiro256** stream for (seed, stream)."""

    __slots__ = ("_s",)

    def __init__(self, seed: int, stream: int = 0):
        self._s = list(derive_state(seed, stream))

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        return self.next_u64() % n

    def shuffle(self, items: list) -> None:
        """In-place backward Fisher-Yates."""
        for j in range(len(items) - 1, 0, -1):
            r = self.randbelow(j + 1)
            items[j], items[r] = items[r], items[j]

    def sample_prefix(self, items: Sequence[T], k: int) -> list[T]:
        """Uniform k-subset as the prefix of a partial forward Fisher-Yates."""
        arr = list(items)
        n = len(arr)
        if not 0 <= k <= n:
            raise ValueError("sample size out of range")
        for j in range(k):
            r = j + self.randbelow(n - j)
            arr[j], arr[r] = arr[r], arr[j]
        return arr[:k]


class VectorStreams:
    """xoshiro256** streams (seed, first), (seed, first+1), ... stepped in lockstep.

    Produces exactly the same per-stream output sequence as ``Stream``;
    used to run independent Monte Carlo trials as numpy batches.
    """

    def __init__(self, seed: int, first: int, count: int):
        streams = np.arange(first, first + count, dtype=np.uint64)
        sm = (np.uint64(seed & MASK64) + streams * np.uint64(_GOLDEN))
        cols = []
        for _ in range(4):
            sm = sm + np.uint64(_GOLDEN)
            z = sm.copy()
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            cols.append(z ^ (z >> np.uint64(31)))
        self._s = cols

    def next_u64(self) -> np.ndarray:
        s = self._s
        result = self._rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
        t = s[1] << np.uint64(17)
        s[2] = s[2] ^ s[0]
        s[3] = s[3] ^ s[1]
        s[1] = s[1] ^ s[2]
        s[0] = s[0] ^ s[3]
        s[2] = s[2] ^ t
        s[3] = self._rotl(s[3], 45)
        return result

    def randbelow(self, n: int) -> np.ndarray:
        return self.next_u64() % np.uint64(n)

    @staticmethod
    def _rotl(x: np.ndarray, k: int) -> np.ndarray:
        return (x << np.uint64(k)) | (x >> np.uint64(64 - k))
