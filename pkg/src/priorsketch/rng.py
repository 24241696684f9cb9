"""Seeded random streams.

All randomness in the pipeline flows through PCG64 generators keyed by
(seed, purpose tag, index). Substreams are derived with
``SeedSequence(seed, spawn_key=key)``, which is a pure function of its
arguments, so any consumer can be recomputed in isolation: resample b of a
bootstrap never depends on how many draws resample b-1 consumed, and
per-draw simulations may run in any order (or in parallel) without
changing results.
"""

import numpy as np

# Purpose tags keep independent uses of one user-facing seed from
# colliding on the same stream.
RESAMPLE = 0        # bootstrap resample index
PREDICTOR = 1       # predictor marginal draws, per column
PARAMS = 2          # parameter vector draws from priors
NOISE = 3           # response noise, per parameter draw
PAIRING = 4         # connect-plan permutation, per dataset version


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream identified by (seed, key)."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))
