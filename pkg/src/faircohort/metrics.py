"""Utility measures and fairness-preservation checkers.

The linear utility of a selection rule is the expected sum of selected
scores. The maxmin utility is the minimum probability-to-score ratio, which
equals the worst case of the ratio sum(p*u)/sum(s*u) over unknown utility
vectors u in [0,1]^n: the worst case is always attained at a basis vector,
and ``worst_case_ratio`` verifies that equivalence constructively.
"""

from __future__ import annotations

import math

import numpy as np

from .model import FairnessReport


def _pair(probs, scores):
    p = np.asarray(probs, dtype=np.float64)
    s = np.asarray(scores, dtype=np.float64)
    if p.shape != s.shape or p.ndim != 1:
        raise ValueError("marginals and scores must be 1-D and the same length")
    return p, s


def linear_utility(marginals, scores) -> float:
    """Expected sum of selected scores: sum(s_i * p_i)."""
    p, s = _pair(marginals, scores)
    return float(p @ s)


def maxmin_utility(marginals, scores) -> float:
    """Minimum p_i/s_i over positive-score candidates; +inf if none."""
    p, s = _pair(marginals, scores)
    mask = s > 0.0
    if not mask.any():
        return math.inf
    return float(np.min(p[mask] / s[mask]))


def worst_case_ratio(marginals, scores, trials: int, rng):
    """Minimum of sum(p*u)/sum(s*u) over sampled and basis utility vectors.

    Returns ``(value, u)`` for the minimizing vector. Vectors with
    sum(s*u) == 0 are skipped (the ratio is undefined there). The minimum
    always lands on a basis vector and equals ``maxmin_utility``.
    """
    p, s = _pair(marginals, scores)
    if trials < 0:
        raise ValueError("trials must be >= 0")
    if not (s > 0.0).any():
        raise ValueError("worst_case_ratio needs at least one positive score")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(int(rng))
    n = p.size

    best = math.inf
    best_u = None
    for i in range(n):
        if s[i] <= 0.0:
            continue
        value = p[i] / s[i]
        if value < best:
            best = value
            best_u = np.eye(n)[i]
    if trials:
        u = gen.random((int(trials), n))
        den = u @ s
        num = u @ p
        valid = den > 0.0
        if valid.any():
            ratios = num[valid] / den[valid]
            j = int(np.argmin(ratios))
            if ratios[j] < best:
                best = float(ratios[j])
                best_u = u[valid][j]
    return float(best), best_u


def check_fairness(marginals, scores) -> FairnessReport:
    """Scan all pairs for the largest |p_i - p_j| - |s_i - s_j| slack."""
    p, s = _pair(marginals, scores)
    n = p.size
    if n < 2:
        return FairnessReport(0.0, None, 0.0)
    gap = np.abs(p[:, None] - p[None, :]) - np.abs(s[:, None] - s[None, :])
    np.fill_diagonal(gap, -np.inf)
    flat = int(np.argmax(gap))
    i, j = divmod(flat, n)
    worst = float(gap[i, j])
    # pairs are only named above the float-noise floor
    pair = (int(i), int(j)) if worst > 1e-12 else None
    return FairnessReport(worst, pair, max(0.0, worst))
