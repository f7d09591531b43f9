"""Counter-based random streams keyed by (seed, stream tag, ...).

Every stochastic component draws from its own Philox stream derived from
the user seed and a fixed tag, so results do not depend on draw order,
scheduling, or parallelism.
"""

from __future__ import annotations

import numpy as np

# Stream tags (one per draw family).
STREAM_GAMMA_D = 0
STREAM_SIGMA_D = 1
STREAM_SIGMA_Y = 2
STREAM_VALID_SET = 3
STREAM_PI = 4
STREAM_NOISE_D = 5
STREAM_NOISE_Y = 6
STREAM_BOOTSTRAP = 7
STREAM_REPLICATE = 8
STREAM_MEDIAN_SE = 9


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the stream identified by (seed, *path)."""
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, path)])))


def derive_seed(master_seed: int, index: int) -> int:
    """Stable 64-bit child seed for replicate ``index`` of ``master_seed``."""
    ss = np.random.SeedSequence([int(master_seed), STREAM_REPLICATE, int(index)])
    return int(ss.generate_state(1, np.uint64)[0])
