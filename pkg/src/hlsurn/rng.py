"""Counter-based uniform streams.

Every run of a batch owns an independent SplitMix64 stream. The state of run
``r`` is the ``r``-th output of a SplitMix64 sequence seeded with the batch
seed, and the ``n``-th uniform of that run is the ``n``-th SplitMix64 output
from that state. Any uniform is therefore a pure function of
``(rng_seed, run, step)``, which is what makes batch results independent of how
runs are split across workers.

Uniforms are the top 53 bits of a 64-bit output scaled by 2**-53, so they lie
in [0, 1).
"""

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _as_u64(seed):
    return np.uint64(int(seed) & _MASK)


def run_states(rng_seed, runs):
    """SplitMix64 states for the given run indices."""
    runs = np.asarray(runs, dtype=np.uint64)
    base = _mix(np.asarray([_as_u64(rng_seed)], dtype=np.uint64))[0]
    return _mix(base + _GAMMA * (runs + np.uint64(1)))


def uniforms(rng_seed, runs, start, stop):
    """Uniforms for steps ``start..stop-1`` of each run, shape ``(len(runs), stop-start)``."""
    states = run_states(rng_seed, np.atleast_1d(runs))
    steps = np.arange(start, stop, dtype=np.uint64) + np.uint64(1)
    z = _mix(states[:, None] + _GAMMA * steps[None, :])
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def run_uniforms(rng_seed, run, n):
    """The first ``n`` uniforms of a single run as a 1-d array."""
    return uniforms(rng_seed, [run], 0, n)[0]
