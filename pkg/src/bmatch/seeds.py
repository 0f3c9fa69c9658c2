"""Deterministic substream derivation.

Every source of randomness in the package flows from an integer seed
plus a tuple of indices (cell, instance, trial, ...).  Substreams built
this way are reproducible bit-for-bit across runs and worker counts and
never require generating earlier streams first.
"""

from __future__ import annotations

import numpy as np

__all__ = ["derive_rng", "derive_seed"]


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """A generator for the substream identified by ``(seed, *key)``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A stable 63-bit integer seed for the substream ``(seed, *key)``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint64)[0] >> 1)
