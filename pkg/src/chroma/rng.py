"""Deterministic random streams.

All randomness in the package flows through numpy's Philox counter-based
generator, keyed directly by the user-facing 64-bit seed.  Philox has a
fixed published algorithm, so a (seed, stream) pair reproduces the same
draws on any platform.  Independent streams (one per chain) are obtained
by jumping the counter, never by reseeding.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return the Philox generator for ``seed``, advanced to ``stream``."""
    bitgen = np.random.Philox(key=seed & ((1 << 64) - 1))
    if stream:
        bitgen = bitgen.jumped(stream)
    return np.random.Generator(bitgen)
