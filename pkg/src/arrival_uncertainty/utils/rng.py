"""Seeded random streams.

All randomness goes through a counter-based Philox generator keyed by
``(seed, stream)``, so work split across streams merges to the same result
whatever the worker count.
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_rng", "MASK64"]

MASK64 = (1 << 64) - 1


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return an independent generator for sub-stream ``stream`` of ``seed``."""
    if stream < 0:
        raise ValueError(f"stream index must be >= 0, got {stream}")
    key = np.random.SeedSequence([int(seed) & MASK64, int(stream)])
    return np.random.Generator(np.random.Philox(key))
