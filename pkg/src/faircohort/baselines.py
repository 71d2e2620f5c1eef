"""Reference selection rules that preserve fairness without optimizing utility."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import List, Optional, Tuple

import numpy as np

from .metrics import linear_utility, maxmin_utility
from .model import Cohort, MarginalVector, ScoreVector
from .rng import SeededRng

_MAX_ENUM = 20


@dataclass(frozen=True)
class WeightedBaseline:
    """Exhaustive weighted-sampling distribution over all k-subsets.

    Each subset is drawn with probability proportional to the sum of its
    members' scores.
    """

    subsets: Tuple[Tuple[int, ...], ...]
    probabilities: np.ndarray
    marginals: MarginalVector
    linear: float
    maxmin: float
    ids: tuple

    def sample(self, rng) -> Cohort:
        rng = SeededRng.coerce(rng)
        u = rng.uniform()
        acc = 0.0
        pick = len(self.subsets) - 1
        for j, p in enumerate(self.probabilities):
            acc += p
            if u < acc:
                pick = j
                break
        return Cohort(tuple(self.ids[i] for i in self.subsets[pick]))


def weighted_sampling_baseline(scores: ScoreVector, rng=None) -> WeightedBaseline:
    """Enumerate every k-subset with probability proportional to its weight.

    Limited to n <= 20 candidates (C(n, k) subsets are enumerated). With an
    all-zero score vector the distribution degenerates to uniform.
    """
    n, k = len(scores), scores.k
    if n > _MAX_ENUM:
        raise ValueError(f"weighted sampling enumerates subsets; n must be <= {_MAX_ENUM}")
    s = scores.scores
    subsets = tuple(combinations(range(n), k))
    weights = np.array([s[list(sub)].sum() for sub in subsets], dtype=np.float64)
    total = float(weights.sum())
    if total > 0.0:
        probs = weights / total
    else:
        probs = np.full(len(subsets), 1.0 / len(subsets))
    marg = np.zeros(n)
    for sub, p in zip(subsets, probs):
        for i in sub:
            marg[i] += p
    marginals = MarginalVector(marg, k, ids=scores.ids, shift=0.0, mode="identity")
    return WeightedBaseline(
        subsets=subsets,
        probabilities=probs,
        marginals=marginals,
        linear=linear_utility(marg, s),
        maxmin=maxmin_utility(marg, s),
        ids=scores.ids,
    )


def uniform_baseline(n: int, k: int, rng, ids: Optional[tuple] = None) -> Cohort:
    """Uniformly random k-subset; every candidate's marginal is k/n."""
    if k > n:
        raise ValueError(f"k={k} exceeds n={n}")
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = SeededRng.coerce(rng)
    if ids is None:
        ids = tuple(f"c{i + 1}" for i in range(n))
    # Floyd-style partial shuffle on index positions
    pool = list(range(n))
    chosen: List[int] = []
    for t in range(k):
        j = t + rng.below(n - t)
        pool[t], pool[j] = pool[j], pool[t]
        chosen.append(pool[t])
    return Cohort(tuple(ids[i] for i in sorted(chosen)))
