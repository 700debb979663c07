"""Stream derivation for reproducible randomness.

Every random stream in a run is derived from the single top-level seed plus a
tuple of purpose labels, e.g. ``("trial", eval_id, trial_id)``.  The labels are
hashed with BLAKE2b so that adding new consumers or running trials in parallel
never shifts the draws seen by existing ones.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *labels: object) -> int:
    """Return a 64-bit child seed for ``seed`` and the given labels."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode())
    return int.from_bytes(h.digest(), "little")


def stream(seed: int, *labels: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *labels))
