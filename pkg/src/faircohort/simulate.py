"""Monte Carlo marginal estimation for every selection mode.

Trial t runs the configured algorithm end to end under seed ``seed + t``;
the empirical frequency of each candidate then converges to its marginal
selection probability, reported with a 4-sigma binomial half-width.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .accel import jit_kernel
from .baselines import weighted_sampling_baseline
from .model import ScoreVector
from .offline import linear_marginals, ratio_marginals
from .online_linear import stream_selection_counts as _linear_counts
from .online_ratio import stream_selection_counts as _ratio_counts
from .rng import next_uniform, seed_state
from .rounding import kernel_seed, round_mc

MODES = ("offline-linear", "offline-ratio", "online-linear", "online-ratio",
         "baseline-weighted", "baseline-uniform")


@dataclass(frozen=True)
class EmpiricalMarginals:
    ids: tuple
    frequencies: np.ndarray
    half_widths: np.ndarray
    trials: int
    seed: int


@jit_kernel
def _uniform_mc(n, k, trials, seed):
    # Partial Fisher-Yates per trial; returns selection counts.
    counts = np.zeros(n, np.int64)
    pool = np.empty(n, np.int64)
    state = np.empty(1, np.uint64)
    for t in range(trials):
        seed_state(state, seed + t)
        for j in range(n):
            pool[j] = j
        for r in range(k):
            j = r + int(next_uniform(state) * (n - r))
            pool[r], pool[j] = pool[j], pool[r]
            counts[pool[r]] += 1
    return counts


def _half_width(freq: np.ndarray, trials: int) -> np.ndarray:
    return 4.0 * np.sqrt(freq * (1.0 - freq) / trials)


def _weighted_counts(scores: ScoreVector, trials: int, seed: int) -> np.ndarray:
    base = weighted_sampling_baseline(scores)
    cdf = np.cumsum(base.probabilities)
    state = np.empty(1, np.uint64)
    picks = np.empty(trials, np.int64)
    s0 = kernel_seed(seed)
    for t in range(trials):
        seed_state(state, s0 + t)
        u = next_uniform(state)
        picks[t] = min(int(np.searchsorted(cdf, u, side="right")), len(base.subsets) - 1)
    counts = np.zeros(len(scores), np.int64)
    freq = np.bincount(picks, minlength=len(base.subsets))
    for sub, c in zip(base.subsets, freq):
        if c:
            for i in sub:
                counts[i] += c
    return counts


def estimate_marginals(mode: str, candidates, k: int, *, trials: int,
                       seed: int, epsilon: float = None,
                       alpha: float = None) -> EmpiricalMarginals:
    """Empirical selection frequencies over ``trials`` seeded runs."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if isinstance(candidates, ScoreVector):
        scores = candidates
    else:
        scores = ScoreVector.from_records(list(candidates), k)
    n = len(scores)
    s0 = kernel_seed(seed)

    if mode == "offline-linear" or mode == "offline-ratio":
        make = linear_marginals if mode == "offline-linear" else ratio_marginals
        probs = make(scores).probs
        sums, bad = round_mc(probs.copy(), 1.0, int(trials), s0)
        if bad:
            raise RuntimeError(f"{bad} of {trials} draws broke the rounding shape contract")
        counts = sums
    elif mode == "online-linear":
        if epsilon is None:
            raise ValueError("online-linear needs epsilon")
        counts = _linear_counts(scores.scores, k, epsilon, trials, seed)
    elif mode == "online-ratio":
        if alpha is None:
            raise ValueError("online-ratio needs alpha")
        counts = _ratio_counts(scores.scores, k, alpha, trials, seed)
    elif mode == "baseline-weighted":
        counts = _weighted_counts(scores, int(trials), seed)
    else:
        counts = _uniform_mc(n, int(scores.k), int(trials), s0)

    freq = np.asarray(counts, dtype=np.float64) / float(trials)
    return EmpiricalMarginals(
        ids=scores.ids,
        frequencies=freq,
        half_widths=_half_width(freq, int(trials)),
        trials=int(trials),
        seed=int(seed),
    )
