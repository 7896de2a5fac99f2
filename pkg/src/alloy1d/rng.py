"""Counter-based random numbers for reproducible disorder sampling.

Coupling constants are produced by hashing the tuple (seed, replica, site)
with a splitmix64-style avalanche function instead of by advancing a stateful
generator.  Two properties follow and both are load-bearing for the rest of
the package:

* the value attached to a lattice site never depends on how many other sites
  are sampled, so enlarging a box keeps the disorder in the smaller box
  literally identical, and
* any subset of replicas can be computed on any worker in any order with
  bit-identical results.

All arithmetic is unsigned 64-bit with wraparound.  The scalar stages run on
Python integers (masked to 64 bits) and the per-site stage runs vectorized on
uint64 arrays, which numpy wraps silently.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


def _mix_scalar(z: int) -> int:
    """splitmix64 finalizer on a Python int, masked to 64 bits."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MUL1) & _MASK
    z = ((z ^ (z >> 27)) * _MUL2) & _MASK
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int, replica: int) -> int:
    """Collapse (seed, replica) into one 64-bit stream key."""
    if replica < 0:
        raise ValueError(f"replica index must be nonnegative, got {replica}")
    h = _mix_scalar(seed + _GOLDEN)
    h = _mix_scalar(h ^ _mix_scalar(replica * _GOLDEN + 1))
    return h


def derive_seed(seed: int, label: str) -> int:
    """Derive an independent 64-bit seed for a named sub-experiment."""
    h = _mix_scalar(seed + _GOLDEN)
    for byte in label.encode("utf-8"):
        h = _mix_scalar(h ^ (byte + _GOLDEN))
    return h


def site_uniform01(seed: int, replica: int, sites: np.ndarray) -> np.ndarray:
    """Uniform(0, 1) variate for each site, keyed by (seed, replica, site).

    Negative site indices are fine; they are reinterpreted through their
    two's complement bit pattern, which is injective on int64.
    """
    key = np.uint64(stream_key(seed, replica))
    s = np.ascontiguousarray(sites, dtype=np.int64).astype(np.uint64)
    z = _mix_array(s * np.uint64(_GOLDEN) + np.uint64(1))
    z = _mix_array(z ^ key)
    # 53 high bits -> double in [0, 1)
    return (z >> np.uint64(11)) * 2.0**-53
