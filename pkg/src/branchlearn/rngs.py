"""Seed-stream helpers.

All randomness in the package flows through named streams derived from a
single integer seed, so that independently generated objects (patterns,
per-afferent spike trains, training trials) are reproducible and do not
depend on generation order.
"""

import numpy as np

# Stream tags keep unrelated draws from colliding on the same seed.
TASK_VALUES = 0
TASK_LABELS = 1
RATE_SPIKES = 2
SINGLE_SPIKES = 3
TRAINER = 4
INIT_CONNECTOME = 5
DATASET_SPLIT = 6
NOISE_TEST = 7


def stream(seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, *path).

    PCG64 seeded through SeedSequence is platform independent, so equal
    arguments produce bit-identical draws everywhere.
    """
    return np.random.default_rng([int(seed)] + [int(p) for p in path])
