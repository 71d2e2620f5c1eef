"""Dependent rounding: one pass that rounds a list to {0, cap} plus one remainder.

Given values a_1..a_n in [0, cap], a single left-to-right pass pairs the
current entry with the running "pending" entry and randomly settles one of
the two, preserving their sum exactly and each entry in expectation. The
output therefore contains floor(sum/cap) entries equal to cap, at most one
strictly between 0 and cap, and zeros elsewhere, with E[output_i] = a_i.

Every selection algorithm in this package reduces to this pass: cohort
draws use cap=1 over probabilities (``round_prob``) and the streaming
eliminations use integer caps over multiplicities (``round_nat``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .accel import jit_kernel
from .rng import SeededRng, next_uniform, seed_state

#: Absolute tolerance for snapping values onto {0, cap}. Accumulated float
#: drift must never leave an entry marginally above the cap, and a sum that
#: is a cap-multiple up to drift must yield zero remainder.
SNAP = 1e-9


@dataclass(frozen=True)
class RoundingResult:
    """Rounded values plus the position of the one fractional entry, if any."""

    values: np.ndarray
    remainder_index: Optional[int]


@jit_kernel
def round_pass(values, cap, state):
    # In-place pairwise pass; returns the index of the entry left pending.
    # (0, 0) pairs are skipped without consuming randomness. Pair totals and
    # the final remainder are snapped onto {0, cap} within SNAP.
    n = values.shape[0]
    if n == 0:
        return -1
    pending = 0
    for i in range(1, n):
        a = values[i]
        b = values[pending]
        if a == 0.0 and b == 0.0:
            continue
        total = a + b
        u = next_uniform(state)
        if total <= cap + SNAP:
            if total > cap:
                total = cap
            if u * total < a:
                values[i] = total
                values[pending] = 0.0
                pending = i
            else:
                values[i] = 0.0
                values[pending] = total
        else:
            denom = 2.0 * cap - total
            if denom <= SNAP:
                # both entries are (nearly) at cap already: settle as a no-op
                values[i] = cap
                values[pending] = cap
                pending = i
            elif u * denom < cap - b:
                values[i] = cap
                values[pending] = total - cap
            else:
                values[i] = total - cap
                values[pending] = cap
                pending = i
    v = values[pending]
    if v <= SNAP:
        values[pending] = 0.0
    elif v >= cap - SNAP:
        values[pending] = cap
    return pending


@jit_kernel
def round_mc(values, cap, trials, seed):
    # Monte Carlo over per-trial seeds seed..seed+trials-1. Returns the
    # per-entry sum of outputs and the number of trials whose output broke
    # the shape contract (full entries, at most one remainder, sum intact).
    n = values.shape[0]
    sums = np.zeros(n)
    buf = np.empty(n)
    state = np.empty(1, dtype=np.uint64)
    total = 0.0
    for j in range(n):
        total += values[j]
    full_expect = int(np.floor(total / cap + SNAP))
    rem_expect = total - full_expect * cap
    if rem_expect < SNAP:
        rem_expect = 0.0
    bad = 0
    for t in range(trials):
        seed_state(state, seed + t)
        for j in range(n):
            buf[j] = values[j]
        round_pass(buf, cap, state)
        n_full = 0
        n_mid = 0
        mid = 0.0
        s = 0.0
        for j in range(n):
            v = buf[j]
            s += v
            sums[j] += v
            if v == cap:
                n_full += 1
            elif v > 0.0:
                n_mid += 1
                mid = v
        ok = abs(s - total) <= SNAP and n_full == full_expect
        if rem_expect == 0.0:
            ok = ok and n_mid == 0
        else:
            ok = ok and n_mid == 1 and abs(mid - rem_expect) <= SNAP
        if not ok:
            bad += 1
    return sums, bad


def _prepare(values, cap: float) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("values must be 1-D")
    if not np.isfinite(cap) or cap <= 0:
        raise ValueError("cap must be a positive finite number")
    if not np.all(np.isfinite(arr)):
        raise ValueError("values must be finite")
    if arr.size and (arr.min() < 0.0 or arr.max() > cap + SNAP):
        raise ValueError(f"values must lie in [0, {cap}]")
    # snap drift onto the boundaries before the pass sees it
    arr[arr <= SNAP] = 0.0
    arr[arr >= cap - SNAP] = cap
    return arr


def _run(values, cap: float, rng) -> RoundingResult:
    arr = _prepare(values, float(cap))
    state = SeededRng.coerce(rng).state
    pending = round_pass(arr, float(cap), state)
    if pending >= 0 and 0.0 < arr[pending] < cap:
        return RoundingResult(arr, int(pending))
    return RoundingResult(arr, None)


def dependent_round(values, cap: float, *, rng) -> RoundingResult:
    """Round ``values`` in [0, cap] to {0, cap} plus at most one remainder.

    The sum is preserved exactly (within SNAP) and each entry is preserved
    in expectation over the rng. ``rng`` is a SeededRng or an integer seed.
    """
    return _run(values, cap, rng)


def round_prob(probs, cap: float = 1.0, *, rng) -> RoundingResult:
    """Dependent rounding for probabilities; requires ``cap <= 1``.

    With cap=1 and a sum equal to an integer k, the output is exactly k
    ones and n-k zeros, i.e. a k-subset draw with the given marginals.
    """
    if cap > 1.0 + SNAP:
        raise ValueError("round_prob requires cap <= 1")
    return _run(probs, cap, rng)


def round_nat(counts, cap: int, *, rng) -> RoundingResult:
    """Dependent rounding for natural numbers with an integer cap >= 1."""
    arr = np.asarray(counts)
    if arr.size and not np.all(arr == np.floor(arr)):
        raise ValueError("round_nat requires integer counts")
    if cap != int(cap) or cap < 1:
        raise ValueError("round_nat requires an integer cap >= 1")
    result = _run(arr.astype(np.float64), float(cap), rng)
    return RoundingResult(np.rint(result.values).astype(np.int64), result.remainder_index)


def kernel_seed(seed: int) -> int:
    """Fold an arbitrary integer seed into the non-negative int64 range.

    Kernels derive per-trial states as ``seed + trial``, so the base seed
    must leave headroom below 2**63 on both backends.
    """
    return int(seed) & ((1 << 62) - 1)


def monte_carlo_means(values, cap: float, trials: int, seed: int):
    """Per-entry Monte Carlo means over ``trials`` seeded passes.

    Returns ``(means, bad)`` where ``bad`` counts trials whose output broke
    the shape contract; a correct implementation always reports ``bad == 0``.
    """
    arr = _prepare(values, float(cap))
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sums, bad = round_mc(arr, float(cap), int(trials), kernel_seed(seed))
    return sums / float(trials), int(bad)
