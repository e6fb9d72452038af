"""Counter-based random streams.

Every stochastic routine in the library draws from a Philox generator keyed
by (seed, operation id, stream index).  Philox is counter-based, so streams
are independent of each other and of execution order: the same key always
reproduces the same samples, no matter how many threads run or in which
order results are merged.
"""

from __future__ import annotations

import numpy as np

# operation ids, one per stochastic routine
OP_AXIOMS = 1
OP_MC_VOLUME = 2
OP_MC_BOX = 3
OP_FACTOR_STARTS = 4
OP_RANDOM_SUBSPACE = 5
OP_PROPERTY_SAMPLES = 6


def stream(seed: int, op_id: int, index: int = 0) -> np.random.Generator:
    """Return the Philox generator for (seed, op_id, index)."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
                    np.uint64((op_id << 32) ^ index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
