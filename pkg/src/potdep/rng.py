"""Counter-based random streams keyed by integer tuples."""

from __future__ import annotations

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for the stream (seed, *key).

    Streams with different keys are independent, and a stream never depends on
    how many other streams were drawn before it.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def derive_seed(seed: int, *key: int) -> int:
    """Collapse the stream (seed, *key) into a single 63-bit seed."""
    words = np.random.SeedSequence(seed, spawn_key=key).generate_state(2, dtype=np.uint32)
    return (int(words[0]) << 31) ^ int(words[1])
