"""Counter-based random streams keyed by (seed, stream ids).

Every trial gets its own Philox generator whose 128-bit key is derived from
the seed and an arbitrary tuple of stream identifiers, so results never depend
on the order in which trials are scheduled.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream_key(seed: int, *ids: int) -> int:
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=tuple(int(i) & _MASK64 for i in ids))
    lo, hi = ss.generate_state(2, dtype=np.uint64)
    return (int(hi) << 64) | int(lo)


def stream(seed: int, *ids: int) -> np.random.Generator:
    """Return an independent generator for ``(seed, *ids)``."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *ids)))
