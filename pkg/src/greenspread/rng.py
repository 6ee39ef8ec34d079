"""Seed derivation.

All randomness flows from 64-bit seeds mixed with SplitMix64 and fed to
numpy's PCG64 via ``default_rng``; both are platform independent.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(*words: int) -> int:
    """Fold integers into one 64-bit seed; order matters."""
    h = 0
    for w in words:
        h = splitmix64(h ^ (int(w) & MASK64))
    return h


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & MASK64)
