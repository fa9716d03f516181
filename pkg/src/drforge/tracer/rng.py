"""Counter-based RNG keyed by (seed, frame, x, y, sample).

Stateless splitmix64: the key is hashed into a starting state and every
draw advances a Weyl sequence, so any (pixel, sample) stream is identical
regardless of scheduling or thread count.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def rng_init(seed, frame, x, y, sample):
    h = _mix(np.uint64(seed) + _GOLDEN)
    h = _mix(h ^ (np.uint64(frame) + np.uint64(0x51ED2701)))
    h = _mix(h ^ (np.uint64(x) + np.uint64(0x85EBCA6B) * np.uint64(y + 1)))
    h = _mix(h ^ (np.uint64(sample) + np.uint64(0xC2B2AE35)))
    return h


@njit(cache=True, inline="always")
def rng_next(state):
    """Advance and draw one float64 in [0, 1)."""
    state = state + _GOLDEN
    z = _mix(state)
    return state, np.float64(z >> np.uint64(11)) * _INV_2_53
