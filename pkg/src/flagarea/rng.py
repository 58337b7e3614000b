"""Counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, index)``, so a given
path (or block of paths) draws the same numbers no matter how the work is
split or in which order it runs.
"""

import zlib

import numpy as np

# vectorised simulators draw noise for paths in fixed-size blocks
BLOCK = 1024


def stream(seed, index=0):
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def block_streams(seed, paths, block=BLOCK):
    """Yield ``(start, stop, rng)`` for consecutive blocks covering ``paths``."""
    for b, start in enumerate(range(0, paths, block)):
        yield start, min(start + block, paths), stream(seed, b)


def child_seed(seed, tag):
    """Derive an independent master seed for a named sub-simulation."""
    if isinstance(tag, str):
        tag = zlib.crc32(tag.encode())
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, tag])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
