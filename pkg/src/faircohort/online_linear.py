"""Streaming cohort selection for the expected-sum objective.

Candidates are bucketed into ceil(1/eps) score groups as they arrive; each
group's score is rounded up to its bucket edge, so fairness holds with an
additive eps slack. After every arrival the per-group selection probability
is recomputed by water-filling the group histogram toward sum k, and each
group's surviving representatives are thinned with an integer-cap dependent
rounding so that one representative stands in for at most floor(1/prob)
eliminated peers. That keeps the number of candidates held back below
2k + ceil(1/eps) + 1 while the final draw still realizes every candidate's
group probability exactly.

Groups whose probability has dropped to zero keep their representatives
unthinned (an unbounded cap would be meaningless); they re-enter the normal
cycle if later arrivals lift the group probability back above zero.
"""

from __future__ import annotations

import math
from typing import Iterable, List, Union

import numpy as np

from .accel import jit_kernel
from .model import PENDING, REJECTED, CandidateRecord, Cohort, StreamDecision
from .rng import SeededRng, seed_state
from .rounding import kernel_seed, round_pass
from .waterfill import fill_down_shift, fill_up_shift

_EDGE_SNAP = 1e-12


def bucket_count(epsilon: float) -> int:
    """Number of positive-score groups, ceil(1/eps) up to edge snapping."""
    if not (0.0 < epsilon <= 1.0):
        raise ValueError("epsilon must lie in (0, 1]")
    return int(math.ceil(1.0 / epsilon - 1e-9))


def pending_bound(k: int, epsilon: float) -> int:
    """Worst-case survivors across positive-probability groups."""
    return 2 * k + bucket_count(epsilon) + 1


@jit_kernel
def _group_index(score, eps, m):
    # 0 iff the score is (snapped to) zero, else the g >= 1 with
    # score in ((g-1)*eps, g*eps]; edge values within 1e-12 snap down.
    if score <= _EDGE_SNAP:
        return 0
    g = int(np.ceil((score - _EDGE_SNAP) / eps))
    if g < 1:
        g = 1
    if g > m:
        g = m
    return g


def group_of(score: float, epsilon: float) -> int:
    """Group index for a score under bucket width ``epsilon``."""
    if not np.isfinite(score) or score < 0.0 or score > 1.0:
        raise ValueError("score must lie in [0, 1]")
    m = bucket_count(epsilon)
    return int(_group_index(float(score), float(epsilon), m))


def rounded_scores(scores, epsilon: float) -> np.ndarray:
    """Bucket-edge scores min(g*eps, 1) that the stream actually optimizes."""
    scores = np.asarray(scores, dtype=np.float64)
    m = bucket_count(epsilon)
    out = np.empty_like(scores)
    for i, s in enumerate(scores):
        if not np.isfinite(s) or s < 0.0 or s > 1.0:
            raise ValueError("score must lie in [0, 1]")
        out[i] = min(_group_index(float(s), epsilon, m) * epsilon, 1.0)
    return out


@jit_kernel
def _linear_ingest(i, score, eps, k, group_value, group_count, group_prob,
                   rep_group, rep_mult, bucket_n, bucket_val, bucket_idx,
                   rejected, state):
    # One arrival: bucket it, re-solve the group water-fill from scratch,
    # then thin every positive-probability group with an integer-cap pass.
    # Returns the number of representative indices written to `rejected`.
    m1 = group_value.shape[0]
    g = _group_index(score, eps, m1 - 1)
    group_count[g] += 1
    rep_group[i] = g
    rep_mult[i] = 1
    n_seen = i + 1
    # sum k is only reachable once n >= k; before that, fill to n (all 1s)
    target = float(k) if n_seen >= k else float(n_seen)
    sum_hat = 0.0
    for gg in range(m1):
        sum_hat += group_count[gg] * group_value[gg]
    if sum_hat < target:
        b = fill_up_shift(group_value, group_count, target)
        for gg in range(m1):
            group_prob[gg] = min(group_value[gg] + b, 1.0)
    elif sum_hat > target:
        b = fill_down_shift(group_value, group_count, target)
        for gg in range(m1):
            group_prob[gg] = max(group_value[gg] - b, 0.0)
    else:
        for gg in range(m1):
            group_prob[gg] = group_value[gg]

    for gg in range(m1):
        bucket_n[gg] = 0
    for j in range(n_seen):
        if rep_mult[j] > 0:
            gg = rep_group[j]
            t = bucket_n[gg]
            bucket_val[gg, t] = float(rep_mult[j])
            bucket_idx[gg, t] = j
            bucket_n[gg] += 1

    nrej = 0
    for gg in range(m1):
        p = group_prob[gg]
        cnt = bucket_n[gg]
        if p <= 0.0 or cnt == 0:
            continue
        cap = np.floor(1.0 / p + _EDGE_SNAP)  # each survivor stands for <= cap peers
        if cap < 1.0:
            cap = 1.0
        if cnt > 1:
            round_pass(bucket_val[gg, :cnt], cap, state)
        for t in range(cnt):
            nm = int(bucket_val[gg, t] + 0.5)
            j = bucket_idx[gg, t]
            rep_mult[j] = nm
            if nm == 0:
                rejected[nrej] = j
                nrej += 1
    return nrej


@jit_kernel
def _linear_finalize(n_seen, group_prob, rep_group, rep_mult, vals, idxs,
                     selected, state):
    # Survivors enter the final cap-1 rounding at multiplicity * group prob.
    cnt = 0
    for j in range(n_seen):
        if rep_mult[j] > 0:
            vals[cnt] = rep_mult[j] * group_prob[rep_group[j]]
            idxs[cnt] = j
            cnt += 1
    if cnt > 1:
        round_pass(vals[:cnt], 1.0, state)
    nsel = 0
    for t in range(cnt):
        if vals[t] > 0.0:
            selected[idxs[t]] = 1
            nsel += 1
    return nsel


@jit_kernel
def _linear_mc(scores, k, eps, group_value, trials, seed):
    # Full stream runs under per-trial seeds; returns selection counts.
    n = scores.shape[0]
    m1 = group_value.shape[0]
    counts = np.zeros(n, np.int64)
    group_count = np.zeros(m1, np.int64)
    group_prob = np.zeros(m1, np.float64)
    rep_group = np.zeros(n, np.int64)
    rep_mult = np.zeros(n, np.int64)
    bucket_n = np.zeros(m1, np.int64)
    bucket_val = np.zeros((m1, n), np.float64)
    bucket_idx = np.zeros((m1, n), np.int64)
    rejected = np.zeros(n, np.int64)
    vals = np.zeros(n, np.float64)
    idxs = np.zeros(n, np.int64)
    selected = np.zeros(n, np.uint8)
    state = np.empty(1, np.uint64)
    for t in range(trials):
        seed_state(state, seed + t)
        for gg in range(m1):
            group_count[gg] = 0
        for j in range(n):
            rep_mult[j] = 0
            selected[j] = 0
        for i in range(n):
            _linear_ingest(i, scores[i], eps, k, group_value, group_count,
                           group_prob, rep_group, rep_mult, bucket_n,
                           bucket_val, bucket_idx, rejected, state)
        _linear_finalize(n, group_prob, rep_group, rep_mult, vals, idxs,
                         selected, state)
        for j in range(n):
            counts[j] += selected[j]
    return counts


def stream_selection_counts(scores, k: int, epsilon: float, trials: int,
                            seed: int) -> np.ndarray:
    """Monte Carlo selection counts for full stream runs (one per trial)."""
    scores = np.asarray(scores, dtype=np.float64)
    m = bucket_count(epsilon)
    group_value = np.minimum(np.arange(m + 1, dtype=np.float64) * epsilon, 1.0)
    return _linear_mc(scores, int(k), float(epsilon), group_value,
                      int(trials), kernel_seed(seed))


class OnlineLinearSelector:
    """Sequential state machine: feed candidates, then draw the cohort.

    One ``ingest`` call at a time; the instance owns its rng, so concurrent
    replication should build one selector per task.
    """

    _GROW = 256

    def __init__(self, k: int, epsilon: float, *, rng):
        if not isinstance(k, (int, np.integer)) or k <= 0:
            raise ValueError("k must be a positive integer")
        self.k = int(k)
        self.epsilon = float(epsilon)
        self.m = bucket_count(self.epsilon)
        self._rng = SeededRng.coerce(rng)
        self.group_value = np.minimum(
            np.arange(self.m + 1, dtype=np.float64) * self.epsilon, 1.0)
        self.group_count = np.zeros(self.m + 1, np.int64)
        self.group_prob = np.zeros(self.m + 1, np.float64)
        self._alloc(self._GROW)
        self._ids: List[str] = []
        self._id_set = set()
        self._n = 0
        self._finalized = False

    def _alloc(self, cap: int):
        self._cap = cap
        self.rep_group = np.zeros(cap, np.int64)
        self.rep_mult = np.zeros(cap, np.int64)
        self._bucket_n = np.zeros(self.m + 1, np.int64)
        self._bucket_val = np.zeros((self.m + 1, cap), np.float64)
        self._bucket_idx = np.zeros((self.m + 1, cap), np.int64)
        self._rejected = np.zeros(cap, np.int64)

    def _grow(self):
        old_group, old_mult, n = self.rep_group, self.rep_mult, self._n
        self._alloc(self._cap * 2)
        self.rep_group[:n] = old_group[:n]
        self.rep_mult[:n] = old_mult[:n]

    @staticmethod
    def _coerce(candidate) -> CandidateRecord:
        if isinstance(candidate, CandidateRecord):
            return candidate
        cid, score = candidate
        return CandidateRecord(str(cid), float(score))

    def ingest(self, candidate: Union[CandidateRecord, tuple]) -> List[StreamDecision]:
        """Admit one candidate; returns this step's decisions (rejections are final)."""
        if self._finalized:
            raise RuntimeError("selector already finalized")
        rec = self._coerce(candidate)
        if not np.isfinite(rec.score) or rec.score < 0.0 or rec.score > 1.0:
            raise ValueError(f"score for {rec.id!r} must lie in [0, 1]")
        if rec.id in self._id_set:
            raise ValueError(f"duplicate candidate id {rec.id!r}")
        if self._n == self._cap:
            self._grow()
        i = self._n
        self._ids.append(rec.id)
        self._id_set.add(rec.id)
        self._n += 1
        nrej = _linear_ingest(i, float(rec.score), self.epsilon, self.k,
                              self.group_value, self.group_count,
                              self.group_prob, self.rep_group, self.rep_mult,
                              self._bucket_n, self._bucket_val,
                              self._bucket_idx, self._rejected,
                              self._rng.state)
        decisions = [StreamDecision(self._ids[self._rejected[t]], REJECTED)
                     for t in range(nrej)]
        if self.rep_mult[i] > 0:
            decisions.append(StreamDecision(rec.id, PENDING))
        return decisions

    def extend(self, candidates: Iterable) -> List[StreamDecision]:
        out: List[StreamDecision] = []
        for candidate in candidates:
            out.extend(self.ingest(candidate))
        return out

    def finalize(self) -> Cohort:
        """Draw the cohort from the surviving representatives."""
        if self._finalized:
            raise RuntimeError("selector already finalized")
        if self._n < self.k:
            raise ValueError(f"stream held {self._n} candidates, fewer than k={self.k}")
        n = self._n
        vals = np.zeros(n, np.float64)
        idxs = np.zeros(n, np.int64)
        selected = np.zeros(n, np.uint8)
        nsel = _linear_finalize(n, self.group_prob, self.rep_group,
                                self.rep_mult, vals, idxs, selected,
                                self._rng.state)
        if nsel != self.k:
            raise RuntimeError(f"final draw selected {nsel} candidates instead of k={self.k}")
        self._finalized = True
        return Cohort(tuple(self._ids[j] for j in np.flatnonzero(selected)))

    # -- inspection ---------------------------------------------------------

    @property
    def n_seen(self) -> int:
        return self._n

    @property
    def group_probabilities(self) -> np.ndarray:
        return self.group_prob.copy()

    def marginal_probabilities(self) -> np.ndarray:
        """Deterministic per-candidate selection probability (group prob)."""
        return self.group_prob[self.rep_group[:self._n]]

    @property
    def pending_count(self) -> int:
        """Candidates not yet rejected (any group)."""
        return int(np.count_nonzero(self.rep_mult[:self._n]))

    @property
    def pending_in_positive_groups(self) -> int:
        """Survivors inside groups that currently hold positive probability."""
        alive = self.rep_mult[:self._n] > 0
        positive = self.group_prob[self.rep_group[:self._n]] > 0.0
        return int(np.count_nonzero(alive & positive))

    @property
    def pending_ids(self) -> tuple:
        return tuple(self._ids[j] for j in np.flatnonzero(self.rep_mult[:self._n] > 0))

    def multiplicities(self) -> dict:
        """Surviving representative weights (id -> peers represented)."""
        alive = np.flatnonzero(self.rep_mult[:self._n] > 0)
        return {self._ids[j]: int(self.rep_mult[j]) for j in alive}
