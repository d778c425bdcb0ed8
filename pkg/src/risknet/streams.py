"""Reproducible random streams.

Every stream is a numpy ``Generator`` over PCG64 seeded from
``SeedSequence(entropy=master_seed, spawn_key=(purpose, *indices))``.
SeedSequence hashing and PCG64 are platform independent, so a stream is
identified by ``(master_seed, purpose, indices)`` alone and never depends on
how work is scheduled.
"""
from __future__ import annotations

import zlib

import numpy as np

MAX_SEED = 2**64 - 1


def purpose_key(purpose: str) -> int:
    return zlib.crc32(purpose.encode("ascii"))


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def seed_sequence(master_seed: int, purpose: str | None = None, *indices: int) -> np.random.SeedSequence:
    key = () if purpose is None else (purpose_key(purpose), *map(int, indices))
    return np.random.SeedSequence(entropy=check_seed(master_seed), spawn_key=key)


def stream(master_seed: int, purpose: str | None = None, *indices: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(master_seed, purpose, *indices)))


def as_generator(seed) -> np.random.Generator:
    """Accept an int seed, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return stream(seed)


def derive_seed(master_seed: int, purpose: str, *indices: int) -> int:
    """A u64 seed for a named sub-experiment, so it can be recorded and replayed."""
    state = seed_sequence(master_seed, purpose, *indices).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)
