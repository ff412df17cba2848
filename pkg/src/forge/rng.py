"""Seed derivation for every random choice in the engine.

All randomness flows from a single integer seed. Independent streams are
derived by hashing the seed together with string labels (stage name, doc id,
epoch, ...) into a Philox key. Philox is counter-based, so derived streams
are stable across platforms and numpy versions.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_rng(seed: int, *labels: object) -> np.random.Generator:
    """Return a Generator unique to (seed, labels).

    The same arguments always produce the same stream; distinct label tuples
    produce statistically independent streams.
    """
    digest = hashlib.sha256(
        ("%d|" % seed + "|".join(str(x) for x in labels)).encode("utf-8")
    ).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
