"""Sub-seed derivation.

Every random stream in the package is obtained from a master seed plus a
tuple of integer keys, e.g. ``(seed, sample_index)`` or
``(master_seed, iteration, technology, method)``.  The keys are hashed by
numpy's ``SeedSequence`` (a counter-mode mixing of the entropy words), and the
resulting state feeds a PCG64 generator.  Both algorithms are fixed by numpy's
stability policy, so streams are identical across runs, platforms and worker
schedules.
"""

from __future__ import annotations

import numpy as np


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, keys)])))


def derive_seed(seed: int, *keys: int) -> int:
    """Return a 63-bit integer seed derived from ``(seed, *keys)``."""
    words = np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(2, dtype=np.uint32)
    return (int(words[0]) << 31) ^ int(words[1])
