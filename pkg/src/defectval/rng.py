"""Stable seed derivation.

Every random stream in the package comes from a PCG64 generator whose seed is
derived from a tuple of labels::

    seed = uint64(first 8 bytes, big-endian, of SHA-256("\\x1f".join(str(p) for p in parts)))

so a stream depends only on *what* it is for (master seed, dataset, technique,
classifier, run index), never on scheduling order or worker count.
"""

from __future__ import annotations

import hashlib

import numpy as np

_SEP = "\x1f"


def derive_seed(*parts: object) -> int:
    """Hash ``parts`` into an unsigned 64-bit seed."""
    text = _SEP.join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
