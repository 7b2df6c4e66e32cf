"""
Seeded random streams.

Every sampler draws from a numpy PCG64 Generator built from a SeedSequence.
A stream is identified by (seed, *spawn_key): parallel tasks and simulation
replicates each get their own key, so results do not depend on execution
order or thread count.
"""
import numpy as np

from twint.core.config import settings

RandomSource = int | np.random.Generator | None


def make_rng(seed: RandomSource = None, *stream: int) -> np.random.Generator:
    """Generator for `seed` (default: settings.DEFAULT_SEED) on the sub-stream `stream`."""
    if isinstance(seed, np.random.Generator):
        return seed
    base = settings.DEFAULT_SEED if seed is None else int(seed)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(base, spawn_key=tuple(stream))))
