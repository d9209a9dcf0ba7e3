"""Portable counter-based random streams.

Every random quantity in the package comes from a ``Stream``: a SplitMix64
generator whose output at counter ``i`` is ``mix64(key + (i + 1) * GAMMA)``.
Keys are derived by hashing a parent key with string or integer labels, so
streams split without coordination and give the same bits on every platform.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1
_TWO_POW_M53 = 1.0 / float(1 << 53)


def mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to a uint64 array."""
    z = np.asarray(x, dtype=np.uint64).copy()
    with np.errstate(over="ignore"):
        z ^= z >> np.uint64(30)
        z *= _M1
        z ^= z >> np.uint64(27)
        z *= _M2
        z ^= z >> np.uint64(31)
    return z


def derive_key(*parts: object) -> int:
    """Hash an ordered tuple of labels into a 64-bit key.

    Integers are encoded as signed 128-bit little-endian, everything else via
    ``str``. The tuple ``(7, "lss")`` and ``("7", "lss")`` hash differently.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, (bool, np.bool_)):
            part = int(part)
        if isinstance(part, (int, np.integer)):
            h.update(b"i")
            h.update(int(part).to_bytes(16, "little", signed=True))
        else:
            data = str(part).encode("utf-8")
            h.update(b"s")
            h.update(struct.pack("<Q", len(data)))
            h.update(data)
    return int.from_bytes(h.digest(), "little")


def uniform_at(key: int, counters: np.ndarray) -> np.ndarray:
    """Uniform doubles in [0, 1) at explicit counters of the stream ``key``."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = np.uint64(key & _MASK) + (c + np.uint64(1)) * GAMMA
    bits = mix64(state)
    return (bits >> np.uint64(11)).astype(np.float64) * _TWO_POW_M53


class Stream:
    """A deterministic stream of random numbers identified by a 64-bit key.

    Draws advance an internal counter, so consecutive calls never reuse bits.
    ``child`` derives an independent stream without touching the counter.
    """

    def __init__(self, key: int):
        self.key = int(key) & _MASK
        self._counter = 0

    @classmethod
    def from_labels(cls, *parts: object) -> "Stream":
        return cls(derive_key(*parts))

    def child(self, *parts: object) -> "Stream":
        return Stream(derive_key(self.key, *parts))

    def _next_counters(self, n: int) -> np.ndarray:
        start = self._counter
        self._counter += n
        return np.arange(start, start + n, dtype=np.uint64)

    def bits(self, n: int) -> np.ndarray:
        c = self._next_counters(n)
        with np.errstate(over="ignore"):
            state = np.uint64(self.key) + (c + np.uint64(1)) * GAMMA
        return mix64(state)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1)."""
        return (self.bits(n) >> np.uint64(11)).astype(np.float64) * _TWO_POW_M53

    def uniform_open(self, n: int) -> np.ndarray:
        """``n`` doubles in (0, 1], safe to pass to ``log``."""
        return 1.0 - self.uniform(n)

    def normal(self, n: int) -> np.ndarray:
        """Standard normal deviates by the Box-Muller transform."""
        u1 = self.uniform_open(n)
        u2 = self.uniform(n)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def permutation(self, n: int) -> np.ndarray:
        keys = self.bits(n)
        return np.argsort(keys, kind="stable")

    def sample(self, population: int, k: int) -> np.ndarray:
        """``k`` distinct positions from ``range(population)`` in draw order."""
        if k < 0 or k > population:
            raise ValueError(f"cannot draw {k} items from {population}")
        return _smallest(self.bits(population), k)

    def weighted_order(self, weights: np.ndarray, k: int) -> np.ndarray:
        """Successive-sampling order of ``k`` items drawn with prob. ∝ weights.

        Exponential race: item i gets key -ln(u_i)/w_i, and the first k items
        in ascending key order are the draws, in draw order.
        """
        w = np.asarray(weights, dtype=np.float64)
        if k < 0 or k > w.size:
            raise ValueError(f"cannot draw {k} items from {w.size}")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        return _smallest(-np.log(self.uniform_open(w.size)) / w, k)


def _smallest(keys: np.ndarray, k: int) -> np.ndarray:
    """Positions of the k smallest keys in ascending key order, ties by position.

    Same result as ``argsort(keys, kind="stable")[:k]`` without a full sort.
    """
    n = keys.size
    if k == 0:
        return np.zeros(0, dtype=np.int64)
    if 4 * k >= n:
        return np.argsort(keys, kind="stable")[:k].astype(np.int64)
    kth = np.partition(keys, k - 1)[k - 1]
    cand = np.flatnonzero(keys <= kth)
    return cand[np.argsort(keys[cand], kind="stable")][:k].astype(np.int64)
