"""Keyed splitmix64 streams with Box-Muller gaussians.

Every random draw in the simulator comes from a stream keyed by
``(seed, *parts)``, so the values a stage sees never depend on which other
stages happened to run before it.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """splitmix64 finalizer."""
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


def tag_hash(tag: str) -> int:
    """Stable 64-bit hash of a string (Python's ``hash`` is salted per process)."""
    return int.from_bytes(hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest(), "little")


def derive_key(seed: int, *parts: int | str) -> int:
    key = seed & MASK64
    for part in parts:
        value = tag_hash(part) if isinstance(part, str) else int(part) & MASK64
        key = mix64(((key + GOLDEN_GAMMA) & MASK64) ^ value)
    return key


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def u64_array(self, n: int) -> np.ndarray:
        """Next ``n`` outputs at once; identical to ``n`` calls of :meth:`next_u64`."""
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = np.uint64(self.state) + steps * np.uint64(GOLDEN_GAMMA)
        self.state = (self.state + n * GOLDEN_GAMMA) & MASK64
        return _mix64_array(states)

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def random_array(self, n: int) -> np.ndarray:
        return (self.u64_array(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def below(self, n: int) -> int:
        """Integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return min(int(self.random() * n), n - 1)

    def gaussians(self, n: int) -> np.ndarray:
        """``n`` standard normal draws via Box-Muller."""
        pairs = (n + 1) // 2
        u = self.random_array(2 * pairs)
        u1 = 1.0 - u[0::2]  # (0, 1], keeps log finite
        u2 = u[1::2]
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * math.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]


def stream(seed: int, *parts: int | str) -> SplitMix64:
    return SplitMix64(derive_key(seed, *parts))
