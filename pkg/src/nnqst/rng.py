"""Seeded, splittable random streams.

Every stochastic routine in the package takes an explicit
:class:`numpy.random.Generator`.  :func:`seeded_rng` builds one from a seed
and an optional path of stream ids, so independent workers (or records)
can draw from non-overlapping streams deterministically::

    rng = seeded_rng(7)          # root stream
    sub = seeded_rng(7, 3)       # stream 3
    subsub = seeded_rng(7, 3, 0) # stream 0 below stream 3
"""

from __future__ import annotations

import numpy as np

#: Name/version tag of the generator construction; bump if it ever changes.
RNG_NAME = "philox-seedsequence-v1"

_MASK64 = (1 << 64) - 1


def seeded_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by ``(seed, *stream)``."""
    if seed < 0 or seed > _MASK64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    for s in stream:
        if s < 0 or s > _MASK64:
            raise ValueError("stream ids must be 64-bit unsigned integers")
    ss = np.random.SeedSequence([int(seed), *map(int, stream)])
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return seeded_rng(int(rng))
    raise TypeError(f"expected a numpy Generator or an int seed, got {type(rng).__name__}")
