"""Independent optimality probe for marginal vectors.

Given scores and a feasible marginal vector, the oracle hunts for a better
feasible vector by two routes that share no code with the closed-form
solvers: random pairwise probability transfers pushed to their feasibility
limit, and one-dimensional re-solves of the common-shift families (scan a
10^4-point shift grid for the sum-k bracket, then refine by root finding).
A report of "no improvement" over many attempts is the acceptance evidence
that the closed-form solutions are in fact optimal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq

from .metrics import linear_utility, maxmin_utility
from .model import MarginalVector, ScoreVector

OBJECTIVES = ("linear", "maxmin")
_GRID = 10_000
_MIN_GAIN = 1e-6


@dataclass(frozen=True)
class OracleVerdict:
    objective: str
    improved: bool
    improved_by: float
    witness: Optional[np.ndarray]
    attempts: int

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "improved": self.improved,
            "improved_by": self.improved_by,
            "witness": None if self.witness is None else [float(x) for x in self.witness],
            "attempts": self.attempts,
        }


def _objective_value(objective: str, probs, scores) -> float:
    if objective == "linear":
        return linear_utility(probs, scores)
    return maxmin_utility(probs, scores)


def _check_feasible(p: np.ndarray, s: np.ndarray, k: int):
    if abs(p.sum() - k) > 1e-6:
        raise ValueError(f"marginals sum to {p.sum()!r}, expected k={k}")
    if p.min() < -1e-9 or p.max() > 1.0 + 1e-9:
        raise ValueError("marginals must lie in [0, 1]")
    gap = np.abs(p[:, None] - p[None, :]) - np.abs(s[:, None] - s[None, :])
    if gap.max() > 1e-9:
        raise ValueError("marginals are not fairness-preserving for these scores")


def _bracketed_shift(s: np.ndarray, k: int, upward: bool) -> float:
    """Shift b with the clipped family summing to k, via grid scan + brentq."""

    def up(b):
        return float(np.minimum(s + b, 1.0).sum()) - k

    def down(b):
        return float(np.maximum(s - b, 0.0).sum()) - k

    f = up if upward else down
    grid = np.linspace(0.0, 1.0, _GRID + 1)
    if upward:
        sums = np.minimum(s[None, :] + grid[:, None], 1.0).sum(axis=1)
        j = int(np.searchsorted(sums, k))
    else:
        sums = np.maximum(s[None, :] - grid[:, None], 0.0).sum(axis=1)
        j = int(np.searchsorted(-sums, -float(k)))
    if j == 0:
        return 0.0
    lo, hi = float(grid[j - 1]), float(grid[min(j, _GRID)])
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        return lo if abs(flo) < abs(fhi) else hi
    return float(brentq(f, lo, hi, xtol=1e-15))


def _shift_family_candidates(s: np.ndarray, k: int) -> List[np.ndarray]:
    """Sum-k members of the min(s+b,1) / max(s-b,0) / rescale families."""
    n = s.size
    total = float(s.sum())
    out: List[np.ndarray] = []
    if total <= k:
        b = _bracketed_shift(s, k, upward=True)
        out.append(np.minimum(s + b, 1.0))
    if total >= k:
        b = _bracketed_shift(s, k, upward=False)
        out.append(np.maximum(s - b, 0.0))
        if total > 0:
            out.append(s * (k / total))
    out.append(np.full(n, k / n))
    return [cand for cand in out if abs(cand.sum() - k) <= 1e-9]


def _transfer_limits(p: np.ndarray, s: np.ndarray, ii, jj) -> np.ndarray:
    """Largest mass move p_i -> p_j keeping feasibility, per attempt."""
    rows = np.arange(len(ii))
    ds = np.abs(s[:, None] - s[None, :])
    d = np.minimum(p[ii], 1.0 - p[jj])
    # receiving side: p_j + d - p_l <= |s_j - s_l| for every other l
    slack_j = ds[jj] - (p[jj][:, None] - p[None, :])
    slack_j[rows, jj] = np.inf
    slack_j[rows, ii] = np.inf
    # giving side: p_l - (p_i - d) <= |s_i - s_l| for every other l
    slack_i = ds[ii] - (p[None, :] - p[ii][:, None])
    slack_i[rows, ii] = np.inf
    slack_i[rows, jj] = np.inf
    d = np.minimum(d, slack_j.min(axis=1))
    d = np.minimum(d, slack_i.min(axis=1))
    # the moving pair itself tightens twice as fast
    d = np.minimum(d, (ds[ii, jj] - (p[jj] - p[ii])) / 2.0)
    return np.maximum(d, 0.0)


def perturbation_oracle(scores, marginals, objective: str, attempts: int,
                        rng) -> OracleVerdict:
    """Search for a feasible improvement over the given marginals.

    ``scores`` may be a ScoreVector or an array (then k is inferred from the
    marginal sum); ``marginals`` a MarginalVector or an array. Improvements
    below 1e-6 are treated as noise.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    if isinstance(scores, ScoreVector):
        s, k = scores.scores, scores.k
    else:
        s = np.asarray(scores, dtype=np.float64)
        k = None
    p = marginals.probs if isinstance(marginals, MarginalVector) else np.asarray(marginals, dtype=np.float64)
    if p.shape != s.shape:
        raise ValueError("marginals and scores must have the same length")
    if k is None:
        k = int(round(p.sum()))
    _check_feasible(p, s, k)
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(int(rng))
    n = s.size

    base = _objective_value(objective, p, s)
    best_gain = 0.0
    witness = None

    for cand in _shift_family_candidates(s, k):
        gain = _objective_value(objective, cand, s) - base
        if gain > best_gain:
            best_gain, witness = gain, cand

    attempts = int(attempts)
    if attempts > 0 and n >= 2:
        ii = gen.integers(0, n, attempts)
        jj = gen.integers(0, n - 1, attempts)
        jj = jj + (jj >= ii)
        dmax = _transfer_limits(p, s, ii, jj)
        fracs = gen.random(attempts)
        for d in (dmax, dmax * fracs):
            if objective == "linear":
                gains = d * (s[jj] - s[ii])
                t = int(np.argmax(gains))
                if gains[t] > best_gain:
                    cand = p.copy()
                    cand[ii[t]] -= d[t]
                    cand[jj[t]] += d[t]
                    best_gain, witness = float(gains[t]), cand
            else:
                mask = s > 0.0
                if not mask.any():
                    continue
                safe = np.where(mask, s, 1.0)
                ratios = np.where(mask, p / safe, np.inf)
                mod = np.tile(ratios, (attempts, 1))
                rows = np.arange(attempts)
                mod[rows, ii] = np.where(mask[ii], (p[ii] - d) / safe[ii], np.inf)
                mod[rows, jj] = np.where(mask[jj], (p[jj] + d) / safe[jj], np.inf)
                vals = mod.min(axis=1)
                t = int(np.argmax(vals))
                gain = float(vals[t]) - base
                if gain > best_gain:
                    cand = p.copy()
                    cand[ii[t]] -= d[t]
                    cand[jj[t]] += d[t]
                    best_gain, witness = gain, cand

    improved = best_gain > _MIN_GAIN
    return OracleVerdict(
        objective=objective,
        improved=improved,
        improved_by=float(best_gain) if improved else 0.0,
        witness=witness if improved else None,
        attempts=attempts,
    )
