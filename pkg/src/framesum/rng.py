"""Deterministic, splittable random streams.

Every consumer of randomness (init, clip sampling, mask sampling, ...) gets
its own generator derived from a 64-bit seed plus a string label and optional
integer indices. Reordering or interleaving consumers therefore cannot change
anyone's draws, and the same (seed, label, indices) always yields the same
stream on every platform.
"""

import numpy as np


def stream(seed: int, label: str, *indices: int) -> np.random.Generator:
    """Return the PCG64 generator for one consumer.

    `label` names the consumer ("init", "clips", ...); `indices` pin a
    position such as an iteration number so draws are pre-assigned rather
    than sequential across iterations.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, *label.encode("utf-8"), *indices]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
