"""Seeded random streams.

Every random draw in the package comes from a ``numpy.random.Generator``
built by :func:`stream`. Substream ``(seed, i, j, ...)`` is derived with
``SeedSequence(seed, spawn_key=(i, j, ...))``, so a chunk of Monte Carlo
trials gets the same numbers whether it runs first, last, or on another
thread.
"""

from __future__ import annotations

import numpy as np

SEED_MASK = (1 << 64) - 1


def stream(seed: int, *key: int) -> np.random.Generator:
    seed = int(seed) & SEED_MASK
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A 64-bit child seed; used where a plain integer must be recorded."""
    seed = int(seed) & SEED_MASK
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def as_generator(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return stream(0 if seed_or_rng is None else seed_or_rng)
