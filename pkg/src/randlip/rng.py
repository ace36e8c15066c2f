"""Seed -> substream derivation.

Every random draw in the package comes from ``substream(seed, label, *index)``.
The label is hashed with CRC32 so that streams for different purposes never
collide, and the integer indices (sample number, epoch, ...) extend the
``SeedSequence`` spawn key.
"""

from __future__ import annotations

import random
import zlib

import numpy as np


def _spawn_key(label: str, index: tuple[int, ...]) -> tuple[int, ...]:
    return (zlib.crc32(label.encode()),) + tuple(int(i) for i in index)


def seed_sequence(seed: int, label: str, *index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=_spawn_key(label, index))


def substream(seed: int, label: str, *index: int) -> np.random.Generator:
    """Numpy generator for the stream ``(seed, label, index...)``."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, label, *index)))


def py_substream(seed: int, label: str, *index: int) -> random.Random:
    """``random.Random`` for the same derivation; used where exact big-integer
    draws (``randrange`` on counts far beyond 2**64) are needed."""
    state = seed_sequence(seed, label, *index).generate_state(8, dtype=np.uint32)
    return random.Random(int.from_bytes(state.tobytes(), "little"))
