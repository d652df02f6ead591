"""Seeded, splittable random streams.

Every stream is a Philox (counter-based) generator keyed by a
``SeedSequence(master_seed, spawn_key=(stream,))``, so distinct stream
indices give independent sequences and no result depends on the order in
which streams are consumed.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def generator(seed, stream=0):
    """Return a fresh ``numpy.random.Generator`` for ``(seed, stream)``."""
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be nonnegative")
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def label_stream(label, index=0):
    """Fixed labeled hash of ``(label, index)`` to a 63-bit stream index."""
    digest = hashlib.sha256(f"{label}/{int(index)}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1
