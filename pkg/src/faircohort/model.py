"""Shared domain records: candidates, scores, marginals, cohorts, decisions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

MODES = ("shift-up", "shift-down", "scale-down", "identity")

PENDING = "pending"
REJECTED = "rejected"


@dataclass(frozen=True)
class CandidateRecord:
    """One stream element: a candidate id plus its classifier score in [0, 1]."""

    id: str
    score: float


@dataclass(frozen=True)
class StreamDecision:
    """Verdict emitted while streaming; a rejection is final."""

    candidate_id: str
    verdict: str  # PENDING or REJECTED


def validate_scores(scores) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size == 0:
        raise ValueError("scores must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if scores.min() < 0.0 or scores.max() > 1.0:
        raise ValueError("scores must lie in [0, 1]")
    return scores


def _normalize_ids(ids: Optional[Iterable], n: int) -> tuple:
    if ids is None:
        return tuple(f"c{i + 1}" for i in range(n))
    out = tuple(str(x) for x in ids)
    if len(out) != n:
        raise ValueError("ids and scores have different lengths")
    if len(set(out)) != n:
        raise ValueError("candidate ids must be unique")
    return out


class ScoreVector:
    """A scored candidate pool together with the cohort size ``k <= n``."""

    __slots__ = ("ids", "scores", "k")

    def __init__(self, scores, k: int, ids: Optional[Iterable] = None):
        self.scores = validate_scores(scores)
        if not isinstance(k, (int, np.integer)):
            raise ValueError("k must be an integer")
        if k <= 0:
            raise ValueError("k must be positive")
        if k > self.scores.size:
            raise ValueError(f"k={k} exceeds the number of candidates ({self.scores.size})")
        self.k = int(k)
        self.ids = _normalize_ids(ids, self.scores.size)

    @classmethod
    def from_records(cls, records: Sequence[CandidateRecord], k: int) -> "ScoreVector":
        return cls([r.score for r in records], k, ids=[r.id for r in records])

    def __len__(self) -> int:
        return self.scores.size

    def __repr__(self) -> str:
        return f"ScoreVector(n={len(self)}, k={self.k})"


class MarginalVector:
    """Per-candidate selection probabilities summing to k.

    ``shift`` is the scalar adjustment that produced the probabilities and
    ``mode`` names the branch: additive fill upward ("shift-up"), additive
    fill downward ("shift-down"), multiplicative rescale ("scale-down"), or
    untouched scores ("identity").
    """

    __slots__ = ("ids", "probs", "k", "shift", "mode")

    def __init__(self, probs, k: int, ids: Optional[Iterable] = None,
                 shift: float = 0.0, mode: str = "identity"):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(probs)):
            raise ValueError("probs must be finite")
        if probs.min() < -1e-9 or probs.max() > 1.0 + 1e-9:
            raise ValueError("probs must lie in [0, 1]")
        if abs(float(probs.sum()) - k) > 1e-9:
            raise ValueError(f"probs must sum to k={k}, got {probs.sum()!r}")
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.probs = np.clip(probs, 0.0, 1.0)
        self.k = int(k)
        self.ids = _normalize_ids(ids, probs.size)
        self.shift = float(shift)
        self.mode = mode

    def __len__(self) -> int:
        return self.probs.size

    def __repr__(self) -> str:
        return f"MarginalVector(n={len(self)}, k={self.k}, mode={self.mode!r})"


@dataclass(frozen=True)
class Cohort:
    """The realized selection: exactly k candidate ids, in input order."""

    ids: tuple

    def __post_init__(self):
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("cohort ids must be unique")

    def __len__(self) -> int:
        return len(self.ids)

    def as_set(self) -> frozenset:
        return frozenset(self.ids)


@dataclass(frozen=True)
class FairnessReport:
    """Worst pairwise slack of |p_i - p_j| over |s_i - s_j|.

    ``epsilon_satisfied`` is the tightest additive slack under which every
    pairwise constraint holds (0 when preservation is exact).
    """

    max_violation: float
    violating_pair: Optional[tuple]
    epsilon_satisfied: float

    def to_dict(self) -> dict:
        return {
            "max_violation": self.max_violation,
            "violating_pair": list(self.violating_pair) if self.violating_pair else None,
            "epsilon_satisfied": self.epsilon_satisfied,
        }
