"""Deterministic RNG substreams derived from one 64-bit master seed.

Every random decision in the toolkit draws from a generator built here, so
a run is reproducible from (master seed, call-site labels) alone.  Labels
are hashed with crc32, not Python's salted ``hash``.
"""

from __future__ import annotations

import zlib

import numpy as np


def _label_entropy(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFF
    return zlib.crc32(str(label).encode("utf-8"))


def substream(seed: int, *labels) -> np.random.Generator:
    """Generator for the (seed, *labels) stream; same inputs, same stream."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    entropy.extend(_label_entropy(label) for label in labels)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def spawn_seed(seed: int, *labels) -> int:
    """64-bit child seed for handing to a sub-component."""
    return int(substream(seed, *labels).integers(0, 2**63 - 1))
