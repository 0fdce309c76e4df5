"""Reproducible child seeds: one master seed plus a label path."""
from __future__ import annotations

import zlib

import numpy as np


def derive_seed(seed: int, *parts) -> int:
    """Stable 32-bit seed for the unit of work named by ``parts``.

    Keyed by labels rather than by position, so adding or removing other
    units never changes this one's stream.
    """
    key = "/".join(str(p) for p in parts).encode()
    return int(np.random.SeedSequence([int(seed), zlib.crc32(key)]).generate_state(1)[0])
