"""Derived random streams.

Every stochastic draw gets its own PCG64 generator keyed by
(master seed, purpose tag, indices...), so results never depend on the
order in which workers run.
"""
import zlib

import numpy as np


def stream(seed: int, tag: str, *index: int) -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(tag.encode("utf-8"))]
    key.extend(int(i) for i in index)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))
