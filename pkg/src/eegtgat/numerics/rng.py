"""Deterministic, splittable random streams.

Every stochastic component draws from a counter-based Philox generator keyed
by the run seed plus a structured path (purpose tag, fold, epoch, ...), so
runs are bit-reproducible and independent streams can be consumed in
parallel without coordination.
"""

import numpy as np

# purpose tags used as the first spawn-key component
KFOLD = 0
SHUFFLE = 1
VAL_SPLIT = 2
INIT = 3
FORWARD = 4
SYNTH = 5


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator identified by (seed, path).

    The same (seed, path) always yields the same stream; distinct paths
    yield statistically independent streams.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(seed=ss))
