"""Closed-form water-filling: a common shift with clipping at 1 (or 0).

Raising every value by the same amount and clipping at 1 until a target sum
is met has a unique fixed point; instead of redistributing overflow
iteratively, these solvers sort once and solve the piecewise-linear equation
for the shift directly. The weighted variants serve the streaming algorithm,
which fills over score-group histograms rather than individual candidates.
"""

from __future__ import annotations

import numpy as np

from .accel import jit_kernel

_TOL = 1e-12


@jit_kernel
def fill_up_shift(values, weights, target):
    # Smallest b >= 0 with sum(w * min(v + b, 1)) == target.
    # Caller guarantees sum(w*v) <= target <= sum(w).
    n = values.shape[0]
    order = np.argsort(values)
    total_w = 0.0
    total_wv = 0.0
    for j in range(n):
        total_w += weights[j]
        total_wv += weights[j] * values[j]
    clip_w = 0.0
    clip_wv = 0.0
    t = 0
    while t < n:
        rest_w = total_w - clip_w
        if rest_w <= 0.0:
            break
        b = (target - clip_w - (total_wv - clip_wv)) / rest_w
        hi = values[order[n - 1 - t]]
        if hi + b <= 1.0 + _TOL:
            return b if b > 0.0 else 0.0
        w = weights[order[n - 1 - t]]
        clip_w += w
        clip_wv += w * hi
        t += 1
    # everything clips: the minimal shift that lifts the smallest value to 1
    return 1.0 - values[order[0]]


@jit_kernel
def fill_down_shift(values, weights, target):
    # Smallest b >= 0 with sum(w * max(v - b, 0)) == target.
    # Caller guarantees 0 <= target <= sum(w*v).
    n = values.shape[0]
    order = np.argsort(values)
    total_w = 0.0
    total_wv = 0.0
    for j in range(n):
        total_w += weights[j]
        total_wv += weights[j] * values[j]
    clip_w = 0.0
    clip_wv = 0.0
    t = 0
    while t < n:
        rest_w = total_w - clip_w
        if rest_w <= 0.0:
            break
        b = ((total_wv - clip_wv) - target) / rest_w
        lo = values[order[t]]
        if lo - b >= -_TOL:
            return b if b > 0.0 else 0.0
        w = weights[order[t]]
        clip_w += w
        clip_wv += w * lo
        t += 1
    # everything clips to zero: target is 0; push the largest value down
    return values[order[n - 1]]


def water_fill_up(values, target_sum: float):
    """Return ``(min(v + b, 1), b)`` with the outputs summing to target_sum.

    Requires ``sum(values) <= target_sum <= len(values)`` so a solution with
    all entries in [0, 1] exists.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("values must be a non-empty 1-D sequence")
    total = float(arr.sum())
    if target_sum < total - 1e-9:
        raise ValueError(f"target_sum {target_sum} is below the current sum {total}")
    if target_sum > arr.size + 1e-9:
        raise ValueError(f"target_sum {target_sum} exceeds the maximum {arr.size}")
    b = float(fill_up_shift(arr, np.ones_like(arr), float(target_sum)))
    return np.minimum(arr + b, 1.0), b


def water_fill_down(values, target_sum: float):
    """Return ``(max(v - b, 0), b)`` with the outputs summing to target_sum.

    Requires ``0 <= target_sum <= sum(values)``.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("values must be a non-empty 1-D sequence")
    total = float(arr.sum())
    if target_sum < -1e-9:
        raise ValueError("target_sum must be non-negative")
    if target_sum > total + 1e-9:
        raise ValueError(f"target_sum {target_sum} exceeds the current sum {total}")
    b = float(fill_down_shift(arr, np.ones_like(arr), float(target_sum)))
    return np.maximum(arr - b, 0.0), b
