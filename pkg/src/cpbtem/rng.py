"""Seeded counter-based random streams.

Every draw is a pure function of ``(seed, stream, block)`` plus its position
inside the block, so work split across any number of threads reproduces the
sequential result bit for bit.  Blocks use the Philox counter-based bit
generator.
"""

from __future__ import annotations

import numpy as np

STREAM_PROTOCOL = 1
STREAM_DETECTOR = 2
STREAM_BASELINE = 3
STREAM_SPECIMEN = 4
STREAM_SCALING = 5


def substream(seed: int, stream: int, block: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream), int(block)])
    return np.random.Generator(np.random.Philox(ss))

