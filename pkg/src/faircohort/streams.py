"""Seeded synthetic score streams for experiments and stress tests."""

from __future__ import annotations

import re
from typing import List, Optional

import numpy as np

from .model import CandidateRecord
from .online_linear import bucket_count

_BETA_RE = re.compile(r"^beta\(\s*([0-9.eE+-]+)\s*,\s*([0-9.eE+-]+)\s*\)$")
_TWO_POINT_RE = re.compile(r"^two-point\{(.+)\}$")
_ADVERSARIAL_RE = re.compile(r"^adversarial-boundary(?:\(\s*([0-9.eE+-]+)\s*\))?$")


def _ids(n: int) -> List[str]:
    width = max(3, len(str(n)))
    return [f"c{i + 1:0{width}d}" for i in range(n)]


def generate_stream(spec: str, n: int, seed: int,
                    epsilon: Optional[float] = None) -> List[CandidateRecord]:
    """Deterministic candidate stream for a distribution spec.

    Specs: ``uniform01``, ``beta(a,b)``, ``two-point{score:count,...}``
    (counts must total n), and ``adversarial-boundary`` or
    ``adversarial-boundary(eps)`` which walks the group edges g*eps +/- 1e-13
    to stress bucket assignment.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    spec = spec.strip()
    ids = _ids(n)

    if spec == "uniform01":
        gen = np.random.default_rng(int(seed))
        scores = gen.random(n)
        return [CandidateRecord(i, float(s)) for i, s in zip(ids, scores)]

    m = _BETA_RE.match(spec)
    if m:
        a, b = float(m.group(1)), float(m.group(2))
        if a <= 0 or b <= 0:
            raise ValueError("beta parameters must be positive")
        gen = np.random.default_rng(int(seed))
        scores = gen.beta(a, b, size=n)
        return [CandidateRecord(i, float(min(max(s, 0.0), 1.0))) for i, s in zip(ids, scores)]

    m = _TWO_POINT_RE.match(spec)
    if m:
        scores: List[float] = []
        for part in m.group(1).split(","):
            part = part.strip()
            if not part:
                continue
            try:
                value, count = part.split(":")
                value, count = float(value), int(count)
            except ValueError as exc:
                raise ValueError(f"bad two-point entry {part!r}") from exc
            if count < 0 or not (0.0 <= value <= 1.0):
                raise ValueError(f"bad two-point entry {part!r}")
            scores.extend([value] * count)
        if len(scores) != n:
            raise ValueError(f"two-point counts total {len(scores)}, expected n={n}")
        return [CandidateRecord(i, s) for i, s in zip(ids, scores)]

    m = _ADVERSARIAL_RE.match(spec)
    if m:
        eps = float(m.group(1)) if m.group(1) else epsilon
        if eps is None:
            raise ValueError("adversarial-boundary needs an epsilon, e.g. adversarial-boundary(0.1)")
        if not (0.0 < eps <= 1.0):
            raise ValueError("epsilon must lie in (0, 1]")
        groups = bucket_count(eps)
        scores = []
        for j in range(n):
            g = 1 + (j // 2) % groups
            offset = 1e-13 if j % 2 == 0 else -1e-13
            scores.append(float(min(max(g * eps + offset, 0.0), 1.0)))
        return [CandidateRecord(i, s) for i, s in zip(ids, scores)]

    raise ValueError(f"unknown stream spec {spec!r}")
