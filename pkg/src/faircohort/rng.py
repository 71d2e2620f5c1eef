"""Deterministic 64-bit random source shared by every randomized routine.

All randomness in this package flows through explicitly seeded splitmix64
streams, so every run is replayable from its seed. The generator state is a
length-1 uint64 array that compiled and interpreted kernels mutate in place.

The stepping function exists in two forms: uint64 wraparound arithmetic for
the numba backend and masked Python integers for the fallback. The two are
bit-identical (``tests/test_accel.py`` asserts it), which is what makes
reports byte-stable across backends.
"""

from __future__ import annotations

import numpy as np

from .accel import NUMBA_ENABLED

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 2.0**-53


def _mix_py(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def fresh_state(seed: int) -> np.ndarray:
    """Length-1 uint64 state array for the given seed (any Python int).

    The seed is passed through the splitmix64 finalizer once, so that
    sequential seeds (the per-trial convention is ``base + trial``) start
    well-separated, decorrelated streams.
    """
    return np.array([_mix_py(int(seed) & _MASK)], dtype=np.uint64)


def next_uniform_py(state) -> float:
    """Interpreted splitmix64 step: uniform float64 in [0, 1)."""
    x = (int(state[0]) + _GOLDEN) & _MASK
    state[0] = x
    return (_mix_py(x) >> 11) * _INV53


def seed_state_py(state, seed) -> None:
    """Interpreted state reset for trial ``seed`` (same hashing as fresh_state)."""
    state[0] = _mix_py(int(seed) & _MASK)


if NUMBA_ENABLED:
    from numba import njit

    _GOLDEN_U = np.uint64(_GOLDEN)
    _MIX1_U = np.uint64(_MIX1)
    _MIX2_U = np.uint64(_MIX2)
    _S30 = np.uint64(30)
    _S27 = np.uint64(27)
    _S31 = np.uint64(31)
    _S11 = np.uint64(11)

    @njit(cache=True)
    def next_uniform(state):
        x = state[0] + _GOLDEN_U
        state[0] = x
        z = x
        z = (z ^ (z >> _S30)) * _MIX1_U
        z = (z ^ (z >> _S27)) * _MIX2_U
        z = z ^ (z >> _S31)
        return (z >> _S11) * _INV53

    @njit(cache=True)
    def seed_state(state, seed):
        z = np.uint64(seed)
        z = (z ^ (z >> _S30)) * _MIX1_U
        z = (z ^ (z >> _S27)) * _MIX2_U
        z = z ^ (z >> _S31)
        state[0] = z

else:
    next_uniform = next_uniform_py
    seed_state = seed_state_py


class SeededRng:
    """Splitmix64 generator owned by one caller at a time.

    Instances are cheap; concurrent work should use one instance per task
    (typically seeded ``base + task_index``).
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = fresh_state(seed)

    def uniform(self) -> float:
        """Uniform float64 in [0, 1)."""
        return float(next_uniform(self.state))

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return int(next_uniform(self.state) * n)

    @classmethod
    def coerce(cls, rng) -> "SeededRng":
        """Accept a SeededRng or a bare integer seed."""
        if isinstance(rng, cls):
            return rng
        if isinstance(rng, (int, np.integer)):
            return cls(int(rng))
        raise TypeError(f"expected SeededRng or int seed, got {type(rng).__name__}")
