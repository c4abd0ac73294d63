"""Deterministic per-task random streams.

Every unit of work gets a generator derived from ``(base seed, task key)``
so results never depend on execution order or worker count.
"""
from __future__ import annotations

import numpy as np


def base_entropy(rng) -> int:
    """Reduce ``rng`` (None, int, int sequence, SeedSequence or Generator) to an integer seed."""
    if rng is None:
        return int(np.random.SeedSequence().entropy)
    if isinstance(rng, (int, np.integer)):
        if rng < 0:
            raise ValueError("seed must be non-negative")
        return int(rng)
    if isinstance(rng, np.random.SeedSequence):
        return int(rng.generate_state(2, dtype=np.uint64)[0])
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(2 ** 63))
    if isinstance(rng, (list, tuple)):
        return base_entropy(np.random.SeedSequence([int(k) for k in rng]))
    raise TypeError(f"cannot seed from {type(rng).__name__}")


def task_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for the task identified by the integer tuple ``key``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


# stream tags keep e.g. probe draws and pair estimates from sharing a stream
PAIR = 1
TRIPLET = 2
PROBE_PAIR = 3
PROBE_TRIPLET = 4
SHUFFLE = 5
SUBSAMPLE = 6
BASELINE = 7
TUPLE = 8
