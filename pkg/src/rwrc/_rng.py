"""Counter-based uniform random numbers keyed by (stream, counter).

Every random quantity in the package is a pure function of a 64-bit key and
a 64-bit counter, via a splitmix64-style finalizer.  This buys two things
ordinary stateful generators do not give us:

* environments are lazy: the conductance at site k is hash(key, k), so a
  window can be extended in either direction and regenerated values are
  bit-identical to what a larger initial window would have produced;
* walks are resumable: step t of a trajectory consumes hash(key, t), so a
  kernel can pause at a window boundary and continue later, and replicas
  can run on any number of threads with byte-identical results.

The vectorized numpy form and the scalar numba form below are the same
function; a test pins them against each other bit for bit.
"""

from __future__ import annotations

import numba
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = 2.0 ** -53
_MASK64 = (1 << 64) - 1

_SHIFT30 = np.uint64(30)
_SHIFT27 = np.uint64(27)
_SHIFT31 = np.uint64(31)
_SHIFT11 = np.uint64(11)


def _as_u64(v):
    """Coerce ints (any sign) or integer arrays to uint64, wrapping mod 2^64."""
    if isinstance(v, np.ndarray):
        return v if v.dtype == np.uint64 else v.astype(np.int64).astype(np.uint64)
    return np.uint64(int(v) & _MASK64)


def mix64(x):
    """Finalizing 64-bit mixer; accepts uint64 scalars or arrays.

    All arithmetic is mod 2^64 on purpose; overflow warnings are silenced.
    """
    with np.errstate(over="ignore"):
        x = np.asarray(x, dtype=np.uint64)
        x = (x ^ (x >> _SHIFT30)) * _MIX1
        x = (x ^ (x >> _SHIFT27)) * _MIX2
        return x ^ (x >> _SHIFT31)


def uniform(key, counters):
    """Uniforms in the open interval (0, 1), one per (key, counter) pair.

    key and counters may be integer scalars or arrays with broadcastable
    shapes; negative counters wrap to uint64, which is fine — site indices
    just need to be distinct.
    """
    with np.errstate(over="ignore"):
        z = mix64(_as_u64(key) + _as_u64(np.asarray(counters)) * _GOLDEN)
    return ((z >> _SHIFT11).astype(np.float64) + 0.5) * _U53


def derive_key(base, *parts):
    """Derive an independent stream key from a base seed and integer parts.

    Any argument may be an integer array, in which case an array of keys
    comes back (shapes must broadcast).
    """
    with np.errstate(over="ignore"):
        k = mix64(_as_u64(base) * _GOLDEN + np.uint64(1))
        for p in parts:
            k = mix64((k ^ _as_u64(p)) * _GOLDEN + np.uint64(1))
    return k if k.ndim else np.uint64(k)


@numba.njit(inline="always")
def uniform_nb(key, counter):
    # scalar twin of uniform(); key and counter are uint64
    z = key + counter * _GOLDEN
    z = (z ^ (z >> _SHIFT30)) * _MIX1
    z = (z ^ (z >> _SHIFT27)) * _MIX2
    z = z ^ (z >> _SHIFT31)
    return (np.float64(z >> _SHIFT11) + 0.5) * _U53
