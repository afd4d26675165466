"""Named, counter-based random streams.

Every stream is a numpy ``Philox`` (4x64, 10 rounds) generator keyed by
the BLAKE2b hash of ``"opbernstein/v1"``, the parent seed and a label
path.  A child stream is therefore a pure function of
``(seed, *labels)``: trials split into blocks draw from
``stream(seed, purpose, block_index)`` and give the same numbers no
matter which worker evaluates the block, or in what order.
"""
from __future__ import annotations

import hashlib

import numpy as np

RNG_VERSION = "opbernstein/v1"

# trials per independent block; changing it changes every Monte Carlo output
BLOCK_SIZE = 2048


def derive_key(seed: int, *labels) -> int:
    """128-bit key from a seed and a label path."""
    h = hashlib.blake2b(digest_size=16)
    h.update(RNG_VERSION.encode())
    h.update(b"\x00" + str(int(seed)).encode())
    for label in labels:
        h.update(b"\x00" + str(label).encode())
    return int.from_bytes(h.digest(), "little")


def stream(seed: int, *labels) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=derive_key(seed, *labels)))


def blocks(trials: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """Split ``trials`` into (block_index, count) pairs."""
    if trials < 0:
        raise ValueError(f"trials must be nonnegative, got {trials}")
    out = []
    start = 0
    b = 0
    while start < trials:
        k = min(block_size, trials - start)
        out.append((b, k))
        start += k
        b += 1
    return out
