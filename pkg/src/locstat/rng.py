"""Seed handling.

Every random draw in the package descends from one 64-bit seed. Streams are
derived with :class:`numpy.random.SeedSequence` spawn keys and drive a
counter-based Philox generator, so a stream is a pure function of
``(seed, *keys)`` and independent of the order in which streams are created.
"""

from __future__ import annotations

import zlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    return zlib.crc32(str(part).encode("utf-8"))


def stream(seed: int, *keys) -> np.random.Generator:
    """Return the generator for ``seed`` and a path of string/int keys."""
    ss = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))
