"""Counter-based random streams.

All randomness in the package flows through numpy's Philox generator
(Philox-4x64-10), a named counter-based algorithm whose output for a given key
is identical across platforms and processes.  Derived streams (per instance,
per trial) are keyed deterministically from the user seed and a tuple of
stream indices via splitmix64, so experiment tables are reproducible across
runs and worker counts, and the derivation is simple to re-implement in any
language:

    h = 0x9E3779B97F4A7C15
    for s in stream_ids: h = splitmix64(h XOR s)
    philox_key = (seed, h)
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 scrambling round (Steele et al.); pure 64-bit arithmetic."""
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def stream_key(seed: int, *stream: int) -> tuple[int, int]:
    """Derive the two 64-bit Philox key words from a seed and stream indices."""
    h = _GOLDEN
    for s in stream:
        h = splitmix64((h ^ (int(s) & _MASK64)) & _MASK64)
    return (int(seed) & _MASK64, h)


def derive_seed(*values: int) -> int:
    """Fold integers into one 64-bit seed (splitmix64 chain over all of them)."""
    h = _GOLDEN
    for v in values:
        h = splitmix64((h ^ (int(v) & _MASK64)) & _MASK64)
    return h


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """A Generator on an independent Philox stream for (seed, *stream)."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *stream)))
