"""Counter-based random streams keyed by (master seed, purpose, indices...).

Every stochastic component derives its generator from a fixed integer key,
so results never depend on execution order or worker count.  Philox is
counter-based; SeedSequence spreads the key words.
"""

from __future__ import annotations

import numpy as np

# Purpose tags keep independent uses of the same master seed from colliding.
SIMULATION = 0
DOMINATING = 1
BOOTSTRAP = 2
CONSTANTS = 3
ORACLE = 4
COUPLING = 5
PROBE = 6


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for the (master_seed, *key) stream.

    The same key always yields the same stream; distinct keys yield
    statistically independent streams.
    """
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))
