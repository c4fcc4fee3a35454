"""Deterministic counter-based randomness.

Philox generators keyed by (seed, *counters) decouple random draws from
execution order: sample (trial, node) gets the same stream whether runs
are serial or parallel, so reductions are reproducible bit-for-bit.
"""
from __future__ import annotations

import numpy as np


def philox(seed: int, *counters: int) -> np.random.Generator:
    """Generator for a (seed, counters...) cell of the sample space."""
    ctr = np.zeros(4, dtype=np.uint64)
    for i, c in enumerate(counters[:4]):
        ctr[i] = np.uint64(c)
    bitgen = np.random.Philox(key=np.uint64(seed), counter=ctr)
    return np.random.Generator(bitgen)
