"""Seeded replicate execution.

Each replicate gets its own ``SeedSequence`` child, so results do not depend
on how many workers run them; joblib returns results in submission order.
"""

import os

import numpy as np
from joblib import Parallel, delayed


def spawn_seeds(seed, n):
    if isinstance(seed, np.random.SeedSequence):
        return seed.spawn(n)
    if isinstance(seed, np.random.Generator):
        seed = seed.integers(0, 2**63 - 1)
    return np.random.SeedSequence(seed).spawn(n)


def resolve_threads(threads=None):
    if threads is None:
        threads = os.environ.get("DRIFTCLASS_THREADS", 1)
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def map_replicates(func, seeds, n_jobs=1):
    """``[func(s) for s in seeds]``, optionally spread over worker processes."""
    if n_jobs == 1 or len(seeds) <= 1:
        return [func(s) for s in seeds]
    return Parallel(n_jobs=n_jobs)(delayed(func)(s) for s in seeds)
