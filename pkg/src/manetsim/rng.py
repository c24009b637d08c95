"""Named, isolated random streams.

Each consumer (mobility of node 3, traffic setup, jitter of node 7, ...) owns its
own PCG64 generator keyed by ``(seed, stream id)``, so draws on one stream never
shift another stream's sequence.
"""

from __future__ import annotations

import zlib
from typing import Hashable

import numpy as np

RNG_ALGORITHM = "numpy PCG64 via SeedSequence(seed, spawn_key)"
RNG_VERSION = 1


def _key_part(part: Hashable) -> int:
    if isinstance(part, (bool, np.bool_)):
        return int(part)
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream id components must be non-negative, got {part}")
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def stream_key(stream_id) -> tuple[int, ...]:
    if isinstance(stream_id, tuple):
        return tuple(_key_part(p) for p in stream_id)
    return (_key_part(stream_id),)


class RngStream:
    """One reproducible uniform stream."""

    __slots__ = ("seed", "stream_id", "_gen")

    def __init__(self, seed: int, stream_id):
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.stream_id = stream_id
        ss = np.random.SeedSequence(self.seed, spawn_key=stream_key(stream_id))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def random(self, size=None):
        return self._gen.random(size)

    def uniform(self, lo: float, hi: float) -> float:
        if not hi > lo:
            raise ValueError(f"inverted or empty interval [{lo}, {hi})")
        x = lo + (hi - lo) * self._gen.random()
        if x >= hi:
            x = float(np.nextafter(hi, lo))
        return x

    def integer(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi)."""
        if not hi > lo:
            raise ValueError(f"inverted or empty interval [{lo}, {hi})")
        return int(self._gen.integers(lo, hi))

    def choice(self, n: int, size: int, replace: bool = False) -> list[int]:
        return [int(v) for v in self._gen.choice(n, size=size, replace=replace)]

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id!r})"


def next_random(stream: RngStream, lo: float, hi: float) -> float:
    """Uniform draw in ``[lo, hi)`` advancing only ``stream``."""
    return stream.uniform(lo, hi)
