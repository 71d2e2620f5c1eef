import numpy as np
import pytest

from faircohort import (
    OnlineRatioSelector,
    REJECTED,
    ReservoirSample,
    ScoreVector,
    ratio_marginals,
)
from faircohort.online_ratio import (
    PHASE_AT_OR_ABOVE,
    PHASE_BELOW,
    pending_bound,
    rest_bound,
    stream_selection_counts,
    top_capacity,
)

EX1_SCORES = [0.1, 0.3, 0.6, 0.9]
EX2_SCORES = [0.5, 0.5, 1.0]


def run_stream(scores, k, alpha, seed):
    selector = OnlineRatioSelector(k, alpha, rng=seed)
    for i, s in enumerate(scores):
        selector.ingest((f"c{i + 1}", float(s)))
    return selector


class TestPhaseSwitch:
    def test_switch_happens_when_sum_hits_k_exactly(self):
        selector = OnlineRatioSelector(2, 0.5, rng=1)
        selector.ingest(("c1", 0.5))
        assert selector.phase == PHASE_BELOW
        selector.ingest(("c2", 0.5))
        assert selector.phase == PHASE_BELOW
        selector.ingest(("c3", 1.0))
        assert selector.phase == PHASE_AT_OR_ABOVE
        assert selector.scale == pytest.approx(1.0, abs=1e-15)

    def test_scale_identity_holds_after_every_step(self):
        gen = np.random.default_rng(2)
        for case in range(20):
            n = int(gen.integers(5, 80))
            k = int(gen.integers(1, 6))
            scores = gen.random(n)
            selector = OnlineRatioSelector(k, 0.5, rng=case)
            for i, s in enumerate(scores):
                selector.ingest((f"c{i}", float(s)))
                if selector.scale is not None:
                    assert abs(selector.scale - k / selector.running_sum) <= 1e-9
                    held = sum(p for _, p in selector.pending)
                    assert abs(held - k) <= 1e-9

    def test_reservoir_is_dropped_at_the_switch(self):
        gen = np.random.default_rng(3)
        selector = OnlineRatioSelector(2, 0.5, rng=5)
        # many small scores build up rest/reservoir, then a burst crosses k
        for i in range(60):
            selector.ingest((f"lo{i}", 0.02))
        assert selector.phase == PHASE_BELOW
        had_reservoir = len(selector.reservoir) > 0
        assert had_reservoir
        selector.ingest(("hi", 0.9))
        selector.ingest(("hi2", 0.95))
        assert selector.phase == PHASE_AT_OR_ABOVE
        assert selector.reservoir == []


class TestCohortFrequencies:
    def test_optimal_pair_selection(self):
        counts = stream_selection_counts(np.array(EX2_SCORES), 2, 0.5, 100_000, seed=7)
        freq = counts / 1e5
        assert freq[2] == 1.0  # the score-1 candidate is always selected
        assert abs(freq[0] - 0.5) < 0.01
        assert abs(freq[1] - 0.5) < 0.01

    def test_equal_scores_select_uniformly(self):
        scores = np.full(12, 0.4)  # sum 4.8 >= k
        counts = stream_selection_counts(scores, 3, 0.5, 100_000, seed=9)
        np.testing.assert_allclose(counts / 1e5, 3 / 12, atol=0.01)

    def test_scaling_regime_matches_proportional_marginals(self):
        gen = np.random.default_rng(11)
        scores = gen.random(100)
        assert scores.sum() >= 3
        counts = stream_selection_counts(scores, 3, 0.5, 100_000, seed=13)
        expected = scores * (3 / scores.sum())
        np.testing.assert_allclose(counts / 1e5, expected, atol=0.015)

    def test_filling_regime_tiny_stream(self):
        counts = stream_selection_counts(np.array([0.1, 0.1]), 2, 0.5, 20_000, seed=15)
        np.testing.assert_allclose(counts / 2e4, 1.0)

    def test_filling_regime_shift_up_marginals(self):
        counts = stream_selection_counts(np.array(EX1_SCORES), 2, 0.5, 100_000, seed=17)
        np.testing.assert_allclose(counts / 1e5, [0.125, 0.325, 0.625, 0.925], atol=0.01)

    def test_filling_regime_with_reservoir_matches_offline(self):
        gen = np.random.default_rng(19)
        scores = gen.random(60) * 0.07  # sum ~ 2.1 < k
        k = 5
        assert scores.sum() < k
        counts = stream_selection_counts(scores, k, 0.5, 100_000, seed=21)
        offline = ratio_marginals(ScoreVector(scores, k)).probs
        np.testing.assert_allclose(counts / 1e5, offline, atol=0.015)

    def test_ascending_scores_churn_the_top_pool(self):
        # every arrival bumps the weakest top member into rest
        scores = np.linspace(0.001, 0.05, 60)
        k = 2
        assert scores.sum() < k
        counts = stream_selection_counts(scores, k, 0.5, 100_000, seed=41)
        offline = ratio_marginals(ScoreVector(scores, k)).probs
        np.testing.assert_allclose(counts / 1e5, offline, atol=0.015)

    def test_descending_scores_feed_rest_directly(self):
        scores = np.linspace(0.05, 0.001, 60)
        k = 2
        counts = stream_selection_counts(scores, k, 0.5, 100_000, seed=43)
        offline = ratio_marginals(ScoreVector(scores, k)).probs
        np.testing.assert_allclose(counts / 1e5, offline, atol=0.015)

    def test_sum_crossing_k_exactly_midstream(self):
        scores = np.array([0.5, 0.5, 0.5, 0.5, 0.5, 0.5])  # hits k=2 at arrival 4
        counts = stream_selection_counts(scores, 2, 0.5, 100_000, seed=45)
        expected = ratio_marginals(ScoreVector(scores, 2)).probs
        np.testing.assert_allclose(counts / 1e5, expected, atol=0.01)

    def test_small_alpha(self):
        gen = np.random.default_rng(23)
        scores = gen.random(40) * 0.1
        k = 3
        counts = stream_selection_counts(scores, k, 0.25, 50_000, seed=25)
        offline = ratio_marginals(ScoreVector(scores, k)).probs
        np.testing.assert_allclose(counts / 5e4, offline, atol=0.02)


class TestPendingBound:
    def test_bound_holds_throughout_random_streams(self):
        gen = np.random.default_rng(27)
        for case in range(20):
            n = int(gen.integers(5, 120))
            k = int(gen.integers(1, 7))
            alpha = float(gen.choice([0.25, 0.4, 0.5]))
            low = bool(gen.integers(0, 2))
            scale = min(0.5 * k / n, 1.0) if low else 1.0
            scores = gen.random(n) * scale
            selector = OnlineRatioSelector(k, alpha, rng=case)
            bound = pending_bound(k, alpha)
            for i, s in enumerate(scores):
                selector.ingest((f"c{i}", float(s)))
                assert selector.pending_count <= bound
            if n >= k:
                assert len(selector.finalize()) == k

    def test_rest_stays_within_its_bound(self):
        gen = np.random.default_rng(29)
        k, alpha = 4, 0.5
        selector = OnlineRatioSelector(k, alpha, rng=31)
        for i in range(300):
            selector.ingest((f"c{i}", float(gen.random() * 0.012)))
            assert len(selector.rest) <= rest_bound(k, alpha) + 1
            assert len(selector.top) <= top_capacity(k, alpha)
            assert len(selector.reservoir) <= k
            # rest is kept rounded: at most one entry off the 1-alpha level
            off_level = [p for _, p in selector.rest if abs(p - (1 - alpha)) > 1e-12]
            assert len(off_level) <= 1


class TestStreamDecisions:
    def test_rejections_are_final(self):
        gen = np.random.default_rng(33)
        selector = OnlineRatioSelector(3, 0.5, rng=35)
        rejected = set()
        for i in range(200):
            for d in selector.ingest((f"c{i}", float(gen.random()))):
                if d.verdict == REJECTED:
                    assert d.candidate_id not in rejected
                    rejected.add(d.candidate_id)
        assert rejected.isdisjoint(selector.pending_ids_set())
        cohort = selector.finalize()
        assert rejected.isdisjoint(cohort.as_set())

    def test_short_stream_is_an_error(self):
        selector = OnlineRatioSelector(3, 0.5, rng=1)
        selector.ingest(("a", 0.4))
        with pytest.raises(ValueError):
            selector.finalize()

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            OnlineRatioSelector(0, 0.5, rng=1)
        with pytest.raises(ValueError):
            OnlineRatioSelector(2, 0.6, rng=1)
        with pytest.raises(ValueError):
            OnlineRatioSelector(2, 0.0, rng=1)
        selector = OnlineRatioSelector(1, 0.5, rng=1)
        selector.ingest(("a", 0.2))
        with pytest.raises(ValueError):
            selector.ingest(("a", 0.3))
        with pytest.raises(ValueError):
            selector.ingest(("b", 2.0))


class TestReservoirSample:
    def test_fills_to_capacity(self):
        res = ReservoirSample(2, rng=1)
        assert res.offer("a") is None
        assert res.offer("b") is None
        assert res.members == ["a", "b"]

    def test_capacity_one_over_three_offers(self):
        hits = {"a": 0, "b": 0, "c": 0}
        trials = 100_000
        for t in range(trials):
            res = ReservoirSample(1, rng=t)
            for item in ("a", "b", "c"):
                res.offer(item)
            hits[res.members[0]] += 1
        for item in hits:
            assert abs(hits[item] / trials - 1 / 3) < 0.01

    def test_uniform_membership_over_ten_offers(self):
        counts = np.zeros(10)
        trials = 100_000
        for t in range(trials):
            res = ReservoirSample(2, rng=1_000_000 + t)
            for item in range(10):
                res.offer(item)
            for member in res.members:
                counts[member] += 1
        np.testing.assert_allclose(counts / trials, 0.2, atol=0.01)

    def test_offer_reports_who_left(self):
        res = ReservoirSample(1, rng=3)
        assert res.offer("a") is None
        out = res.offer("b")
        assert out in ("a", "b")
        assert len(res.members) == 1
