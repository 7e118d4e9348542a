"""Deterministic substream derivation.

Every random draw in the package comes from a Philox generator seeded by
a (master seed, label path) pair, so that any artifact can be regenerated
from the manifest without replaying unrelated draws.  String labels are
folded to 32-bit words with crc32, which is stable across platforms and
Python versions.
"""

from __future__ import annotations

from zlib import crc32

import numpy as np


def _key_word(part) -> int:
    if isinstance(part, str):
        return crc32(part.encode("utf-8"))
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("stream path integers must be nonnegative")
        return int(part)
    raise TypeError(f"stream path entries must be str or int, got {type(part)!r}")


def substream(master_seed: int, *path) -> np.random.Generator:
    """Generator for the stream identified by (master_seed, *path).

    Streams with distinct paths are statistically independent, and the
    same pair always yields the same bit sequence.
    """
    if not isinstance(master_seed, (int, np.integer)) or master_seed < 0:
        raise ValueError("master_seed must be a nonnegative integer")
    key = tuple(_key_word(p) for p in path)
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def stream_label(*path) -> str:
    """Human-readable form of a stream path, used in manifests."""
    return "/".join(str(p) for p in path)
