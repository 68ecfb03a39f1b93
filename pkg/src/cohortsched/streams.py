"""Seeded random stream derivation.

All randomness in the package flows through PCG64 generators derived from a
user seed via ``numpy.random.SeedSequence``, which is portable across
platforms and stable for a fixed numpy version.  A consumer that needs
several independent streams from one seed derives each as
``rng_for(seed, *tags)`` with a distinct integer tag tuple; generating the
same (seed, tags) always yields the same stream, so per-row or per-restart
work can run in any order (or in parallel) without changing results.

Tag conventions used in this package:

* dataset generators: ``(0,)`` for dataset-level draws, ``(1, row)`` for
  the stream of student row ``row``;
* partitioners: ``(0, r)`` per cohpart restart, ``(1,)`` random
  partitioning, ``(2,)`` k-means, ``(3,)`` the cohort sample draw.
"""

import numpy as np


def rng_for(seed: int, *tags: int) -> np.random.Generator:
    """Return a PCG64 generator for the stream identified by (seed, *tags)."""
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    entropy = [seed, *(int(t) for t in tags)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
