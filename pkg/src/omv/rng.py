"""Named random streams derived from one seed.

``stream(seed, "gen")`` and ``stream(seed, "queries")`` are independent and each
is reproducible on its own, so adding a consumer never perturbs the others.
"""
from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    key = (zlib.crc32(name.encode()),) + tuple(int(x) for x in extra)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))
