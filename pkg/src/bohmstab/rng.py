"""Counter-based random-number streams.

Every stochastic component draws from a Philox generator keyed by
(seed, stream index), so a result is a pure function of its seed regardless
of how work units are scheduled across workers.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for the pair (seed, index).

    The same pair always yields the same stream; distinct indices give
    statistically independent streams under the same seed.
    """
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
