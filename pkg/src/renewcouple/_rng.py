"""Seed derivation: every path and run gets its own stream from ``(seed, index)``.

Streams depend only on the master seed, a purpose tag and an index, never on
scheduling order, so results are identical whatever the thread count.
"""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1

# purpose tags keep streams for different jobs disjoint
PATHS = 0
RUNS = 1
STATIONARY_AGES = 2
BOOTSTRAP = 3
LEMMA = 4


def _entropy(seed: int, tag: int, *more: int) -> list[int]:
    return [int(seed) & _MASK, tag, *(int(m) for m in more)]


def stream(seed: int, tag: int, *index: int) -> np.random.Generator:
    """An independent PCG64 generator for ``(seed, tag, *index)``."""
    return np.random.default_rng(np.random.SeedSequence(_entropy(seed, tag, *index)))


def run_streams(seed: int, run: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Three generators for one coupled run: process 1, process 2, lemma draws."""
    children = np.random.SeedSequence(_entropy(seed, RUNS, run)).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)
