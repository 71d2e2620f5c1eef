"""Offline cohort selection: optimal marginals plus the rounding draw.

Two utility models share the machinery. For the expected-sum objective the
optimal fairness-preserving marginals are a water-fill of the scores toward
sum k (upward when the scores undershoot k, downward when they overshoot).
For the worst-case-ratio objective the undershoot branch is identical, while
the overshoot branch rescales all scores by k/sum, which equalizes every
probability-to-score ratio at the achievable maximum.

Both constructions keep |p_i - p_j| <= |s_i - s_j| for every pair, so the
selection probabilities satisfy any fairness metric the scores satisfy.
"""

from __future__ import annotations

import numpy as np

from .model import Cohort, MarginalVector, ScoreVector
from .rounding import kernel_seed, round_mc, round_prob
from .rng import SeededRng
from .waterfill import water_fill_down, water_fill_up


def linear_marginals(scores: ScoreVector) -> MarginalVector:
    """Marginals maximizing the expected sum of selected scores."""
    s, k = scores.scores, scores.k
    total = float(s.sum())
    if total < k:
        probs, b = water_fill_up(s, float(k))
        mode = "shift-up"
    elif total > k:
        probs, b = water_fill_down(s, float(k))
        mode = "shift-down"
    else:
        probs, b = s.copy(), 0.0
        mode = "identity"
    return MarginalVector(probs, k, ids=scores.ids, shift=b, mode=mode)


def ratio_marginals(scores: ScoreVector) -> MarginalVector:
    """Marginals maximizing the minimum probability-to-score ratio."""
    s, k = scores.scores, scores.k
    total = float(s.sum())
    if total < k:
        probs, b = water_fill_up(s, float(k))
        mode = "shift-up"
    elif total > k:
        scale = k / total
        probs, b = s * scale, scale
        mode = "scale-down"
    else:
        probs, b = s.copy(), 0.0
        mode = "identity"
    return MarginalVector(probs, k, ids=scores.ids, shift=b, mode=mode)


def select_cohort(marginals: MarginalVector, *, rng) -> Cohort:
    """Draw exactly k candidates with the given marginal probabilities."""
    rng = SeededRng.coerce(rng)
    result = round_prob(marginals.probs, 1.0, rng=rng)
    chosen = tuple(marginals.ids[i] for i in np.flatnonzero(result.values > 0.0))
    if len(chosen) != marginals.k:
        raise RuntimeError(
            f"rounding produced {len(chosen)} selections instead of k={marginals.k}"
        )
    return Cohort(chosen)


def selection_frequencies(marginals: MarginalVector, trials: int, seed: int) -> np.ndarray:
    """Empirical per-candidate selection rates over seeded repeated draws."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sums, bad = round_mc(marginals.probs.copy(), 1.0, int(trials), kernel_seed(seed))
    if bad:
        raise RuntimeError(f"{bad} of {trials} draws broke the rounding shape contract")
    return sums / float(trials)
