"""Deterministic seed derivation for per-offspring random streams.

Every random draw in a run is keyed by a 64-bit seed derived with
``mix64`` from (run seed, generation, offspring index).  Any offspring can
therefore be regenerated in isolation, and results never depend on how
work was sharded across workers.

The mixing function is SplitMix64 (Steele et al.), fixed bit-exactly:

    splitmix64(x):
        x = (x + 0x9E3779B97F4A7C15) mod 2^64
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 mod 2^64
        x = (x ^ (x >> 27)) * 0x94D049BB133111EB mod 2^64
        return x ^ (x >> 31)

    mix64(a, b)    = splitmix64(splitmix64(a) ^ b)
    mix64(a, b, c) = mix64(mix64(a, b), c)
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (int(x) + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def mix64(*words: int) -> int:
    """Fold any number of 64-bit words into one seed, left to right."""
    if not words:
        raise ValueError("mix64 needs at least one word")
    h = splitmix64(int(words[0]) & _MASK)
    for w in words[1:]:
        h = splitmix64(h ^ (int(w) & _MASK))
    return h


def child_rng(*words: int) -> np.random.Generator:
    """A fresh PCG64 generator seeded by mix64 of the given words."""
    return np.random.Generator(np.random.PCG64(mix64(*words)))
