"""Counter-based seed derivation.

Every random draw in the package flows from one 64-bit master seed through
``child_seed(master, label, *indices)``. Children are independent of the
order in which they are requested, so parallel workers can derive their own
streams without coordination and results do not depend on scheduling.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def child_seed(parent: int, label: str, *indices: int) -> int:
    """Derive a 64-bit child seed from a parent seed, a purpose label and
    an index tuple."""
    h = hashlib.blake2b(digest_size=8)
    h.update(int(parent & _MASK64).to_bytes(8, "little"))
    h.update(label.encode("utf-8"))
    for idx in indices:
        h.update(b"\x1f")
        h.update(int(idx & _MASK64).to_bytes(8, "little"))
    return int.from_bytes(h.digest(), "little")


def rng_for(parent: int, label: str, *indices: int) -> np.random.Generator:
    """A fresh numpy Generator seeded by :func:`child_seed`."""
    return np.random.default_rng(child_seed(parent, label, *indices))
