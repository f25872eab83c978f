"""Seeded random streams.

Every stream is a numpy ``Generator`` over the Philox4x64-10 counter-based
bit generator.  A stream is addressed by a root seed plus a tuple of
non-negative integer keys; the pair is hashed by ``numpy.random.SeedSequence``
(``entropy=seed, spawn_key=keys``), so the same address always yields the
same stream on every platform and independent of the order in which
streams are created.
"""

from __future__ import annotations

import numpy as np

# Stream tags (first key of the address).
EXPLORE = 0
REFINE = 1
FULL_TRAIN = 2
MAGNITUDE = 3
RANDOM_PRUNE = 4


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Return the generator addressed by ``(seed, *keys)``."""
    if seed < 0 or any(k < 0 for k in keys):
        raise ValueError("seed and keys must be non-negative")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(keys))
    return np.random.Generator(np.random.Philox(ss))


def network_stream(seed: int, network_index: int) -> np.random.Generator:
    """Stream owned by cloud member ``network_index`` during exploration."""
    return substream(seed, EXPLORE, network_index)
