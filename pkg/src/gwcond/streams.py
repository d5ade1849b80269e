"""Buffered uniform streams and reproducible per-replicate seeding.

All samplers in this package consume randomness exclusively through a
:class:`UniformStream`. The stream refills a fixed-size buffer from a
``numpy`` PCG64 generator, so the sequence of uniforms is a pure function
of the seed and is independent of whether a consumer pulls values one at a
time (compiled kernels) or in vectorized slices (pure backend). This is
what makes the two kernel backends bit-for-bit interchangeable.
"""

from __future__ import annotations

import numpy as np

# The PCG64 double sequence is invariant to refill chunking, so buffer
# sizing is a pure performance knob: streams start small (cheap for
# short-lived consumers) and grow geometrically for heavy ones.
INITIAL_BUFFER = 1 << 10
MAX_BUFFER = 1 << 19

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(master_seed: int, index: int) -> int:
    """Derive a child seed from (master seed, replicate index).

    splitmix64 finalizer over the golden-ratio-stepped index; a fixed
    avalanche mix so replicate streams are independent of worker layout.
    """
    z = (master_seed + (index + 1) * _GOLDEN) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


class UniformStream:
    """A buffered source of i.i.d. uniforms on [0, 1).

    Consumption order is buffer order; ``take(n)`` and n calls to
    ``take1()`` yield identical values. ``refill()`` may replace ``buf``
    with a larger array, so compiled kernels re-acquire the buffer after
    every refill.
    """

    __slots__ = ("rng", "buf", "pos", "_warm")

    def __init__(self, seed: int):
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.buf = np.empty(INITIAL_BUFFER, dtype=np.float64)
        self.pos = INITIAL_BUFFER
        self._warm = False

    def refill(self) -> None:
        if self._warm and len(self.buf) < MAX_BUFFER:
            self.buf = np.empty(min(2 * len(self.buf), MAX_BUFFER), dtype=np.float64)
        self._warm = True
        self.rng.random(out=self.buf)
        self.pos = 0

    def take1(self) -> float:
        if self.pos >= len(self.buf):
            self.refill()
        u = self.buf[self.pos]
        self.pos += 1
        return u

    def take(self, n: int) -> np.ndarray:
        """Return the next n uniforms as a fresh contiguous array."""
        out = np.empty(n, dtype=np.float64)
        got = 0
        while got < n:
            if self.pos >= len(self.buf):
                self.refill()
            chunk = min(n - got, len(self.buf) - self.pos)
            out[got:got + chunk] = self.buf[self.pos:self.pos + chunk]
            self.pos += chunk
            got += chunk
        return out


def child_stream(master_seed: int, index: int) -> UniformStream:
    return UniformStream(mix64(master_seed, index))
