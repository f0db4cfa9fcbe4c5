"""Deterministic seed derivation for independent random streams.

A single master seed drives every run. Sub-streams (per run, per user
queue, per beam agent, ...) get their own seed through `derive_seed`,
which folds a stream index into the base seed with one round of the
splitmix64 finalizer. Streams derived with distinct indices are
decorrelated but fully reproducible.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    """One splitmix64 finalizer round (public-domain mixing constants)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(base: int, stream: int) -> int:
    """64-bit seed for sub-stream `stream` of `base`.

    derive_seed(base, i) = splitmix64(base + GOLDEN * (i + 1)), the
    textbook splitmix64 sequence advanced by the stream index.
    """
    return splitmix64((base + _GOLDEN * (stream + 1)) & _MASK64)


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for one stream."""
    return np.random.Generator(np.random.PCG64(seed))
