"""Counter-based random numbers keyed on simulation coordinates.

Every draw is a pure function of an integer key tuple, e.g.
``(master_seed, stream, replication, node, coordinate, t, lane)``. Keys are
folded together with the SplitMix64 finalizer, so blocks of draws for many
replications/nodes/coordinates are produced with a handful of vectorized
uint64 operations and no generator state is shared between workers.
"""

import numpy as np
from scipy.special import ndtri

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / float(1 << 53)

# Stream tags keep unrelated consumers of one master seed apart.
STREAM_OBSERVATION = 1
STREAM_SENSOR_NOISE = 2
STREAM_TRANSITION = 3


def _as_u64(value):
    arr = np.asarray(value)
    if arr.dtype.kind == "u" and arr.dtype.itemsize == 8:
        return np.atleast_1d(arr)
    # two's-complement view so negative seeds are still valid keys
    return np.atleast_1d(arr.astype(np.int64).view(np.uint64))


def mix64(z):
    """SplitMix64 finalizer applied elementwise (wrapping uint64 arithmetic)."""
    z = _as_u64(z)
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def fold(key, value):
    """Absorb one more integer (array) into a key (array); broadcasts."""
    return mix64(_as_u64(key) ^ mix64(_as_u64(value) + _GOLDEN))


def key_of(*parts):
    key = mix64(np.uint64(0x243F6A8885A308D3))
    for part in parts:
        key = fold(key, part)
    return key


def uniform(key):
    """Map keys to doubles in the open interval (0, 1)."""
    bits = mix64(key) >> _S11
    return (bits.astype(np.float64) + 0.5) * _INV53


def standard_normal(key):
    """Standard Gaussian by inverse CDF of :func:`uniform`."""
    return ndtri(uniform(key))
