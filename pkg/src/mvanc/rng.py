"""Counter-based pseudo-random number generator for reproducible experiments.

Every stochastic quantity in the toolkit (noise excitations, synthetic
acoustic paths) is drawn from this generator so that a seed pins the whole
experiment bit-for-bit, independent of any third-party RNG's version
history.

The algorithm is fixed and part of the toolkit's file-level compatibility
contract:

* raw word ``i`` (counting from 0) is ``mix64(seed + (i + 1) * GAMMA)``
  computed modulo 2**64, where ``GAMMA = 0x9E3779B97F4A7C15`` and ``mix64``
  is the SplitMix64 finalizer
  (``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
  z *= 0x94D049BB133111EB; z ^= z >> 31``);
* uniforms take the top 53 bits of a raw word, giving values in ``[0, 1)``;
* standard normals come from the Box-Muller transform applied to pairs of
  uniforms (the first uniform of a pair is shifted into ``(0, 1]`` so the
  logarithm is always defined); a request for ``n`` normals always consumes
  ``2 * ceil(n / 2)`` raw words.

A counter-based design makes every draw a pure function of (seed, position),
so arbitrarily large blocks can be produced vectorized without carrying
mutable state beyond the position itself.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_TWO53 = 9007199254740992.0  # 2**53


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MUL1
    z = (z ^ (z >> np.uint64(27))) * _MUL2
    return z ^ (z >> np.uint64(31))


class CounterRng:
    """Deterministic stream of uniforms and normals for a 64-bit seed."""

    def __init__(self, seed: int):
        self._seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
        self._position = 0

    def _raw(self, count: int) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be >= 0")
        start = self._position
        self._position += count
        index = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        return _mix64(self._seed + index * _GAMMA)

    def uniforms(self, count: int) -> np.ndarray:
        """Return `count` doubles uniform on [0, 1)."""
        return (self._raw(count) >> np.uint64(11)).astype(np.float64) / _TWO53

    def normals(self, count: int) -> np.ndarray:
        """Return `count` standard-normal doubles via Box-Muller."""
        if count < 0:
            raise ValueError("count must be >= 0")
        pairs = (count + 1) // 2
        raw = self._raw(2 * pairs)
        # First uniform of each pair lives in (0, 1] so log() is finite.
        u1 = ((raw[:pairs] >> np.uint64(11)).astype(np.float64) + 1.0) / _TWO53
        u2 = (raw[pairs:] >> np.uint64(11)).astype(np.float64) / _TWO53
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = (2.0 * np.pi) * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:count]
