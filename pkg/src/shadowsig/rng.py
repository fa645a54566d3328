"""Seedable, splittable random streams.

Every stochastic operation takes either a 64-bit master seed or an explicit
``numpy.random.Generator``. Sub-streams are derived by hashing the master
seed together with integer indices (``SeedSequence`` entropy lists), so any
parallel schedule over shots/cells/restarts reproduces the sequential result
bit for bit.
"""
from __future__ import annotations

import numpy as np

Seedish = "int | np.random.Generator"


def master_seed(seed_or_rng) -> int:
    """Normalize an int seed or a Generator into a 64-bit master seed."""
    if isinstance(seed_or_rng, np.random.Generator):
        return int(seed_or_rng.integers(0, 2**63 - 1))
    return int(seed_or_rng)


def stream(master: int, *path: int) -> np.random.Generator:
    """Derive the stream identified by an integer path under a master seed."""
    return np.random.default_rng(np.random.SeedSequence([int(master), *map(int, path)]))


def shot_stream(master: int, shot: int) -> np.random.Generator:
    """Stream for one data-collection shot; independent of collection order."""
    return stream(master, 0x5A0D, shot)
