"""Named, splittable random streams.

Every consumer asks for its generator by a path of keys under the root seed,
e.g. ``stream(seed, "world", slot)``.  Streams with different paths are
statistically independent, and adding a new consumer never shifts the draws
of an existing one.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(k) -> int:
    if isinstance(k, (bool, np.bool_)):
        return int(k)
    if isinstance(k, (int, np.integer)):
        if k < 0:
            raise ValueError(f"stream keys must be non-negative, got {k}")
        return int(k)
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    raise TypeError(f"unsupported stream key {k!r}")


def stream(seed: int, *keys) -> np.random.Generator:
    """Return the generator at ``keys`` under root ``seed``."""
    if seed < 0:
        raise ValueError("seed must be >= 0")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def as_rng(rng) -> np.random.Generator:
    """Accept a Generator, an int seed or None (seed 0)."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return np.random.default_rng(0)
    return np.random.default_rng(int(rng))
