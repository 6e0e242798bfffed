"""Seed handling shared by every stochastic module.

All randomness flows through ``numpy.random.Generator`` objects derived from a
single 64-bit master seed.  Child streams are keyed by non-negative integers
via ``SeedSequence([master, *key])``, so a unit of work (a replication, a
bootstrap draw, a pattern index) always sees the same stream regardless of
execution order or worker count.
"""

from __future__ import annotations

import numpy as np

Seed = int


def seed_sequence(seed, *key: int) -> np.random.SeedSequence:
    """Deterministic child sequence for ``(seed, key...)``.

    ``seed`` may itself be a SeedSequence produced here, in which case the new
    key components extend its entropy, so derivations compose:
    seed_sequence(seed_sequence(s, a), b) == seed_sequence(s, a, b).
    """
    if any(k < 0 for k in key):
        raise ValueError("seed key components must be non-negative")
    if isinstance(seed, np.random.SeedSequence):
        entropy = seed.entropy
        base = list(entropy) if isinstance(entropy, (list, tuple)) else [entropy]
        return np.random.SeedSequence([*base, *map(int, key)])
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, key)])


def rng_from(seed, *key: int) -> np.random.Generator:
    """Generator for ``(seed, key...)``; passes an existing generator through."""
    if isinstance(seed, np.random.Generator):
        if key:
            raise ValueError("cannot re-key an already constructed generator")
        return seed
    return np.random.default_rng(seed_sequence(seed, *key))
