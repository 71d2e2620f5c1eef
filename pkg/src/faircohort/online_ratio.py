"""Streaming cohort selection for the worst-case-ratio objective.

While the running score sum is below k, the stream keeps three holding
pools: ``top`` (the ceil(k/alpha) highest scores, held at their raw
scores), ``rest`` (everyone else, repeatedly rounded to {0, 1-alpha} so at
most one fractional entry survives), and a uniform reservoir of size k over
the candidates eliminated from ``rest``. Values entering ``rest`` are
always below alpha <= 1-alpha, and the end-of-stream fill adds less than
alpha to any of them, so the 1-alpha rounding cap never pushes a final
probability past 1.

The first arrival that lifts the sum to k or above dissolves the pools into
a single ``pending`` list and switches to multiplicative mode: every later
arrival enters at score * k/sum, existing entries shrink by (sum-s)/sum,
and a cap-1 rounding trims the list back to k survivors, so the cumulative
scale factor stays exactly k/sum.

If the stream instead ends below k, everyone still held gets the common
additive fill (with overflow past 1 redistributed), the reservoir members
absorb the fill owed to the eliminated candidates in equal shares, and one
final cap-1 rounding draws the cohort.
"""

from __future__ import annotations

import math
from typing import Iterable, List, Optional, Union

import numpy as np

from .accel import jit_kernel
from .model import PENDING, REJECTED, CandidateRecord, Cohort, StreamDecision
from .rng import SeededRng, next_uniform, seed_state
from .rounding import kernel_seed, round_pass

PHASE_BELOW = "below-k"
PHASE_AT_OR_ABOVE = "at-or-above-k"

# ints[] slots shared with the kernels
_TOP_N, _REST_N, _RES_N, _RES_SEEN, _PEND_N, _PHASE = 0, 1, 2, 3, 4, 5
# flts[] slots
_SUM, _SCALE = 0, 1


def _snapped_ceil(x: float) -> int:
    return int(math.ceil(x - 1e-9))


def top_capacity(k: int, alpha: float) -> int:
    """Size of the high-score pool, ceil(k/alpha)."""
    return _snapped_ceil(k / alpha)


def rest_bound(k: int, alpha: float) -> int:
    """Upper bound on the rounded mid pool, ceil(k/(1-alpha))."""
    return _snapped_ceil(k / (1.0 - alpha))


def pending_bound(k: int, alpha: float) -> int:
    """Worst-case candidates held back at any instant."""
    return top_capacity(k, alpha) + rest_bound(k, alpha) + k + 1


@jit_kernel
def _ratio_ingest(i, score, k, alpha, cap_top, top_idx, top_p, rest_idx,
                  rest_p, res_idx, pend_idx, pend_p, ints, flts, rejected,
                  state):
    # One arrival. Returns the number of indices written to `rejected`.
    nrej = 0
    flts[_SUM] += score
    if ints[_PHASE] == 0 and flts[_SUM] < k:
        if ints[_TOP_N] < cap_top:
            top_idx[ints[_TOP_N]] = i
            top_p[ints[_TOP_N]] = score
            ints[_TOP_N] += 1
        else:
            mi = 0
            for t in range(1, ints[_TOP_N]):
                if top_p[t] < top_p[mi]:
                    mi = t
            if top_p[mi] < score:
                # newcomer bumps the weakest top entry into the mid pool
                rest_idx[ints[_REST_N]] = top_idx[mi]
                rest_p[ints[_REST_N]] = top_p[mi]
                ints[_REST_N] += 1
                top_idx[mi] = i
                top_p[mi] = score
            else:
                rest_idx[ints[_REST_N]] = i
                rest_p[ints[_REST_N]] = score
                ints[_REST_N] += 1
        rn = ints[_REST_N]
        if rn > 1:
            round_pass(rest_p[:rn], 1.0 - alpha, state)
        w = 0
        for t in range(rn):
            if rest_p[t] > 0.0:
                rest_idx[w] = rest_idx[t]
                rest_p[w] = rest_p[t]
                w += 1
            else:
                # zeroed: leaves the mid pool, gets a uniform reservoir shot
                cand = rest_idx[t]
                ints[_RES_SEEN] += 1
                if ints[_RES_N] < k:
                    res_idx[ints[_RES_N]] = cand
                    ints[_RES_N] += 1
                else:
                    j = int(next_uniform(state) * ints[_RES_SEEN])
                    if j < k:
                        rejected[nrej] = res_idx[j]
                        nrej += 1
                        res_idx[j] = cand
                    else:
                        rejected[nrej] = cand
                        nrej += 1
        ints[_REST_N] = w
    else:
        if ints[_PHASE] == 0:
            # sum just reached k: pools dissolve into pending
            ints[_PHASE] = 1
            for t in range(ints[_RES_N]):
                rejected[nrej] = res_idx[t]
                nrej += 1
            ints[_RES_N] = 0
            ints[_RES_SEEN] = 0
            pn = 0
            for t in range(ints[_TOP_N]):
                pend_idx[pn] = top_idx[t]
                pend_p[pn] = top_p[t]
                pn += 1
            for t in range(ints[_REST_N]):
                pend_idx[pn] = rest_idx[t]
                pend_p[pn] = rest_p[t]
                pn += 1
            ints[_PEND_N] = pn
            ints[_TOP_N] = 0
            ints[_REST_N] = 0
            incr = k / flts[_SUM]
            flts[_SCALE] = incr
        else:
            incr = (flts[_SUM] - score) / flts[_SUM]
            flts[_SCALE] *= incr
        for t in range(ints[_PEND_N]):
            pend_p[t] *= incr
        pend_idx[ints[_PEND_N]] = i
        pend_p[ints[_PEND_N]] = score * flts[_SCALE]
        ints[_PEND_N] += 1
        if ints[_PEND_N] > 1:
            round_pass(pend_p[:ints[_PEND_N]], 1.0, state)
        w = 0
        for t in range(ints[_PEND_N]):
            if pend_p[t] > 0.0:
                pend_idx[w] = pend_idx[t]
                pend_p[w] = pend_p[t]
                w += 1
            else:
                rejected[nrej] = pend_idx[t]
                nrej += 1
        ints[_PEND_N] = w
    return nrej


@jit_kernel
def _ratio_finalize(n_seen, k, top_idx, top_p, rest_idx, rest_p, res_idx,
                    pend_idx, pend_p, ints, flts, vals, idxs, selected,
                    state):
    # Returns (selected count, error code). Errors: 1 = leftover mass with
    # no reservoir to carry it, 2 = a reservoir share reached 1, 3 = a fill
    # probability exceeded 1 after redistribution.
    if ints[_PHASE] == 1:
        nsel = 0
        for t in range(ints[_PEND_N]):
            if pend_p[t] > 0.0:
                selected[pend_idx[t]] = 1
                nsel += 1
        return nsel, 0
    na = ints[_TOP_N] + ints[_REST_N]
    nr = ints[_RES_N]
    c = (k - flts[_SUM]) / n_seen
    cnt = 0
    for t in range(ints[_TOP_N]):
        vals[cnt] = top_p[t] + c
        idxs[cnt] = top_idx[t]
        cnt += 1
    for t in range(ints[_REST_N]):
        vals[cnt] = rest_p[t] + c
        idxs[cnt] = rest_idx[t]
        cnt += 1
    mass_held = 0.0
    for t in range(na):
        mass_held += vals[t]
    share = 0.0
    if nr > 0:
        # reservoir members split the fill owed to everyone eliminated
        share = (k - mass_held) / nr
        if share < 0.0:
            share = 0.0
    elif abs(k - mass_held) > 1e-6:
        return 0, 1
    while True:
        hi = -1
        hv = 1.0
        for t in range(na):
            if vals[t] > hv:
                hv = vals[t]
                hi = t
        if hi < 0:
            break
        s_ge1 = 0
        for t in range(na):
            if vals[t] >= 1.0:
                s_ge1 += 1
        if n_seen - s_ge1 <= 0:
            vals[hi] = 1.0
            continue
        c2 = (hv - 1.0) / (n_seen - s_ge1)
        n_mod = 0
        for t in range(na):
            if vals[t] < 1.0:
                vals[t] += c2
                n_mod += 1
        if nr > 0:
            share += c2 * (n_seen - s_ge1 - n_mod) / nr
        vals[hi] = 1.0
    if nr > 0 and share >= 1.0:
        return 0, 2
    for t in range(na):
        if vals[t] > 1.0 + 1e-9:
            return 0, 3
    for t in range(nr):
        vals[na + t] = share
        idxs[na + t] = res_idx[t]
    total = na + nr
    if total > 1:
        round_pass(vals[:total], 1.0, state)
    nsel = 0
    for t in range(total):
        if vals[t] > 0.0:
            selected[idxs[t]] = 1
            nsel += 1
    return nsel, 0


@jit_kernel
def _ratio_mc(scores, k, alpha, cap_top, cap_rest, cap_pend, trials, seed):
    # Full stream runs under per-trial seeds; returns (counts, failures).
    n = scores.shape[0]
    counts = np.zeros(n, np.int64)
    top_idx = np.zeros(cap_top, np.int64)
    top_p = np.zeros(cap_top, np.float64)
    rest_idx = np.zeros(cap_rest, np.int64)
    rest_p = np.zeros(cap_rest, np.float64)
    res_idx = np.zeros(k, np.int64)
    pend_idx = np.zeros(cap_pend, np.int64)
    pend_p = np.zeros(cap_pend, np.float64)
    ints = np.zeros(8, np.int64)
    flts = np.zeros(2, np.float64)
    rejected = np.zeros(n + k + 4, np.int64)
    nbuf = cap_top + cap_rest + k + 2
    vals = np.zeros(nbuf, np.float64)
    idxs = np.zeros(nbuf, np.int64)
    selected = np.zeros(n, np.uint8)
    state = np.empty(1, np.uint64)
    failures = 0
    for t in range(trials):
        seed_state(state, seed + t)
        for q in range(8):
            ints[q] = 0
        flts[0] = 0.0
        flts[1] = 0.0
        for j in range(n):
            selected[j] = 0
        for i in range(n):
            _ratio_ingest(i, scores[i], k, alpha, cap_top, top_idx, top_p,
                          rest_idx, rest_p, res_idx, pend_idx, pend_p, ints,
                          flts, rejected, state)
        nsel, err = _ratio_finalize(n, k, top_idx, top_p, rest_idx, rest_p,
                                    res_idx, pend_idx, pend_p, ints, flts,
                                    vals, idxs, selected, state)
        if err != 0 or nsel != k:
            failures += 1
        else:
            for j in range(n):
                counts[j] += selected[j]
    return counts, failures


def stream_selection_counts(scores, k: int, alpha: float, trials: int,
                            seed: int):
    """Monte Carlo selection counts for full stream runs (one per trial)."""
    scores = np.asarray(scores, dtype=np.float64)
    cap_top = top_capacity(k, alpha)
    cap_rest = rest_bound(k, alpha) + 2
    cap_pend = cap_top + cap_rest + 2
    counts, failures = _ratio_mc(scores, int(k), float(alpha), cap_top,
                                 cap_rest, cap_pend, int(trials),
                                 kernel_seed(seed))
    if failures:
        raise RuntimeError(f"{failures} of {trials} stream runs failed invariants")
    return counts


class ReservoirSample:
    """Uniform fixed-size sample over a stream of offers (algorithm R)."""

    __slots__ = ("capacity", "members", "seen", "_rng")

    def __init__(self, capacity: int, *, rng):
        if not isinstance(capacity, (int, np.integer)) or capacity < 1:
            raise ValueError("capacity must be a positive integer")
        self.capacity = int(capacity)
        self.members: list = []
        self.seen = 0
        self._rng = SeededRng.coerce(rng)

    def offer(self, item):
        """Offer one item. Returns whoever leaves: the evicted member, the
        item itself when passed over, or None while filling."""
        self.seen += 1
        if len(self.members) < self.capacity:
            self.members.append(item)
            return None
        j = self._rng.below(self.seen)
        if j < self.capacity:
            evicted = self.members[j]
            self.members[j] = item
            return evicted
        return item


def reservoir_offer(sample: ReservoirSample, item):
    """Offer ``item`` to ``sample``; returns the updated sample."""
    sample.offer(item)
    return sample


class OnlineRatioSelector:
    """Sequential state machine: feed candidates, then draw the cohort.

    ``alpha`` in (0, 1/2] trades pool sizes for rounding headroom; the
    default 1/2 keeps roughly 4k candidates pending in the worst case.
    """

    def __init__(self, k: int, alpha: float = 0.5, *, rng):
        if not isinstance(k, (int, np.integer)) or k <= 0:
            raise ValueError("k must be a positive integer")
        if not (0.0 < alpha <= 0.5):
            raise ValueError("alpha must lie in (0, 1/2]")
        self.k = int(k)
        self.alpha = float(alpha)
        self._rng = SeededRng.coerce(rng)
        self._cap_top = top_capacity(self.k, self.alpha)
        self._cap_rest = rest_bound(self.k, self.alpha) + 2
        self._cap_pend = self._cap_top + self._cap_rest + 2
        self._top_idx = np.zeros(self._cap_top, np.int64)
        self._top_p = np.zeros(self._cap_top, np.float64)
        self._rest_idx = np.zeros(self._cap_rest, np.int64)
        self._rest_p = np.zeros(self._cap_rest, np.float64)
        self._res_idx = np.zeros(self.k, np.int64)
        self._pend_idx = np.zeros(self._cap_pend, np.int64)
        self._pend_p = np.zeros(self._cap_pend, np.float64)
        self._ints = np.zeros(8, np.int64)
        self._flts = np.zeros(2, np.float64)
        self._rejected = np.zeros(self._cap_pend + self.k + 4, np.int64)
        self._ids: List[str] = []
        self._id_set = set()
        self._n = 0
        self._finalized = False

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
        if self._ints[_REST_N] + 1 > self._cap_rest or self._ints[_PEND_N] + 1 > self._cap_pend:
            raise RuntimeError("holding pool exceeded its size bound")
        i = self._n
        self._ids.append(rec.id)
        self._id_set.add(rec.id)
        self._n += 1
        nrej = _ratio_ingest(i, float(rec.score), self.k, self.alpha,
                             self._cap_top, self._top_idx, self._top_p,
                             self._rest_idx, self._rest_p, self._res_idx,
                             self._pend_idx, self._pend_p, self._ints,
                             self._flts, self._rejected, self._rng.state)
        rejected_ids = [self._ids[self._rejected[t]] for t in range(nrej)]
        decisions = [StreamDecision(x, REJECTED) for x in rejected_ids]
        if rec.id in self.pending_ids_set():
            decisions.append(StreamDecision(rec.id, PENDING))
        elif rec.id not in rejected_ids:
            decisions.append(StreamDecision(rec.id, REJECTED))
        return decisions

    def extend(self, candidates: Iterable) -> List[StreamDecision]:
        out: List[StreamDecision] = []
        for candidate in candidates:
            out.extend(self.ingest(candidate))
        return out

    def finalize(self) -> Cohort:
        """Draw the cohort from everyone still held."""
        if self._finalized:
            raise RuntimeError("selector already finalized")
        if self._n < self.k:
            raise ValueError(f"stream held {self._n} candidates, fewer than k={self.k}")
        selected = np.zeros(self._n, np.uint8)
        nbuf = self._cap_top + self._cap_rest + self.k + 2
        vals = np.zeros(nbuf, np.float64)
        idxs = np.zeros(nbuf, np.int64)
        nsel, err = _ratio_finalize(self._n, self.k, self._top_idx,
                                    self._top_p, self._rest_idx, self._rest_p,
                                    self._res_idx, self._pend_idx,
                                    self._pend_p, self._ints, self._flts,
                                    vals, idxs, selected, self._rng.state)
        if err == 1:
            raise RuntimeError("unassigned probability mass with an empty reservoir")
        if err == 2:
            raise RuntimeError("a reservoir share reached probability 1")
        if err == 3:
            raise RuntimeError("a fill probability exceeded 1 after redistribution")
        if nsel != self.k:
            raise RuntimeError(f"final draw selected {nsel} candidates instead of k={self.k}")
        self._finalized = True
        return Cohort(tuple(self._ids[j] for j in np.flatnonzero(selected)))

    # -- inspection ---------------------------------------------------------

    @property
    def n_seen(self) -> int:
        return self._n

    @property
    def phase(self) -> str:
        return PHASE_AT_OR_ABOVE if self._ints[_PHASE] == 1 else PHASE_BELOW

    @property
    def running_sum(self) -> float:
        return float(self._flts[_SUM])

    @property
    def scale(self) -> Optional[float]:
        """Cumulative rescale factor; None while the sum is below k."""
        if self._ints[_PHASE] != 1:
            return None
        return float(self._flts[_SCALE])

    @property
    def pending_count(self) -> int:
        i = self._ints
        return int(i[_TOP_N] + i[_REST_N] + i[_RES_N] + i[_PEND_N])

    def pending_ids_set(self) -> set:
        i = self._ints
        held = set()
        held.update(self._ids[j] for j in self._top_idx[:i[_TOP_N]])
        held.update(self._ids[j] for j in self._rest_idx[:i[_REST_N]])
        held.update(self._ids[j] for j in self._res_idx[:i[_RES_N]])
        held.update(self._ids[j] for j in self._pend_idx[:i[_PEND_N]])
        return held

    @property
    def top(self) -> list:
        n = self._ints[_TOP_N]
        return [(self._ids[self._top_idx[t]], float(self._top_p[t])) for t in range(n)]

    @property
    def rest(self) -> list:
        n = self._ints[_REST_N]
        return [(self._ids[self._rest_idx[t]], float(self._rest_p[t])) for t in range(n)]

    @property
    def reservoir(self) -> list:
        n = self._ints[_RES_N]
        return [self._ids[self._res_idx[t]] for t in range(n)]

    @property
    def pending(self) -> list:
        n = self._ints[_PEND_N]
        return [(self._ids[self._pend_idx[t]], float(self._pend_p[t])) for t in range(n)]
