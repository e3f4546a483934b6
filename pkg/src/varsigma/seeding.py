"""Seeded random streams.

All randomness flows through :func:`make_rng`, which builds a Philox
counter-based generator from ``numpy.random.SeedSequence(seed,
spawn_key=key)``. SeedSequence hashes the entropy and the spawn key with
its documented mixing function, so a stream is a pure function of
``(seed, *key)`` and streams for different keys are independent. This makes
replication ``r`` reproducible regardless of execution order.
"""

from __future__ import annotations

import numpy as np


def seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))


def make_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *key)))


def derive_seed(seed: int, *key: int) -> int:
    """A 63-bit integer seed for the substream ``(seed, *key)``."""
    return int(seed_sequence(seed, *key).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
