"""Counter-based random substreams.

Every stochastic routine in the package draws from a Philox generator keyed
by ``(master_seed, index)``.  Streams for distinct indices are independent,
and a given key always reproduces the same draws, so parallel and serial
execution (and any worker count) agree bit-for-bit.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(master_seed: int, index: int = 0) -> np.random.Generator:
    """Generator for replicate ``index`` of the stream ``master_seed``."""
    key = np.array([master_seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
