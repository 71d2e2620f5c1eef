import math

import numpy as np
import pytest

from faircohort import (
    ScoreVector,
    check_fairness,
    linear_marginals,
    linear_utility,
    maxmin_utility,
    perturbation_oracle,
    ratio_marginals,
    select_cohort,
    selection_frequencies,
)

EX1 = ScoreVector([0.1, 0.3, 0.6, 0.9], 2)
EX1_PERTURBED = ScoreVector([0.3, 0.3, 0.6, 0.9], 2)
EX2 = ScoreVector([0.5, 0.5, 1.0], 2)


class TestLinearMarginals:
    def test_shift_up_instance(self):
        mv = linear_marginals(EX1)
        np.testing.assert_allclose(mv.probs, [0.125, 0.325, 0.625, 0.925], atol=1e-9)
        assert mv.mode == "shift-up"
        assert abs(linear_utility(mv.probs, EX1.scores) - 1.3175) < 1e-9

    def test_raising_a_score_can_lower_the_optimum(self):
        mv = linear_marginals(EX1_PERTURBED)
        np.testing.assert_allclose(mv.probs, [0.275, 0.275, 0.575, 0.875], atol=1e-9)
        assert abs(linear_utility(mv.probs, EX1_PERTURBED.scores) - 1.2975) < 1e-9

    def test_k_equals_n_forces_ones(self):
        mv = linear_marginals(ScoreVector([0.5, 0.5], 2))
        np.testing.assert_allclose(mv.probs, [1.0, 1.0])

    def test_oracle_finds_no_improvement(self):
        sv = ScoreVector([0.2, 0.4, 0.9, 0.95, 0.99], 3)
        mv = linear_marginals(sv)
        verdict = perturbation_oracle(sv, mv, "linear", 100_000, rng=5)
        assert not verdict.improved

    def test_identity_when_sum_is_k(self):
        mv = linear_marginals(ScoreVector([0.9, 0.9, 0.2], 2))
        assert mv.mode == "identity"
        np.testing.assert_allclose(mv.probs, [0.9, 0.9, 0.2])


class TestRatioMarginals:
    def test_identity_instance(self):
        mv = ratio_marginals(EX2)
        np.testing.assert_allclose(mv.probs, [0.5, 0.5, 1.0])
        assert maxmin_utility(mv.probs, EX2.scores) == 1.0
        assert linear_utility(mv.probs, EX2.scores) == 1.5

    def test_symmetric_scale_down(self):
        mv = ratio_marginals(ScoreVector([0.8, 0.8, 0.8, 0.8], 2))
        np.testing.assert_allclose(mv.probs, [0.5, 0.5, 0.5, 0.5])
        assert abs(maxmin_utility(mv.probs, [0.8] * 4) - 0.625) < 1e-12
        assert mv.mode == "scale-down"

    def test_shift_up_with_clipping_is_maxmin_optimal(self):
        sv = ScoreVector([0.1, 0.2, 0.95, 0.99], 3)
        mv = ratio_marginals(sv)
        verdict = perturbation_oracle(sv, mv, "maxmin", 100_000, rng=6)
        assert not verdict.improved

    def test_shift_up_branch_shared_with_linear(self):
        gen = np.random.default_rng(11)
        for _ in range(30):
            n = int(gen.integers(2, 10))
            k = int(gen.integers(1, n + 1))
            scores = gen.random(n) * min(1.0, 0.8 * k / n)
            sv = ScoreVector(scores, k)
            if scores.sum() >= k:
                continue
            np.testing.assert_allclose(
                ratio_marginals(sv).probs, linear_marginals(sv).probs, atol=1e-12)

    def test_scale_down_ratio_is_exactly_k_over_sum(self):
        gen = np.random.default_rng(12)
        for _ in range(30):
            n = int(gen.integers(2, 12))
            scores = gen.random(n) * 0.8 + 0.2
            k = int(gen.integers(1, max(2, int(scores.sum()))))
            if scores.sum() <= k:
                continue
            mv = ratio_marginals(ScoreVector(scores, k))
            assert abs(maxmin_utility(mv.probs, scores) - k / scores.sum()) < 1e-12

    def test_all_zero_scores_fall_back_to_uniform(self):
        for make in (linear_marginals, ratio_marginals):
            mv = make(ScoreVector([0.0, 0.0, 0.0, 0.0], 3))
            np.testing.assert_allclose(mv.probs, [0.75] * 4)


class TestInvariants:
    def test_sum_fairness_monotonicity(self):
        gen = np.random.default_rng(13)
        for _ in range(100):
            n = int(gen.integers(1, 12))
            k = int(gen.integers(1, n + 1))
            sv = ScoreVector(gen.random(n), k)
            for make in (linear_marginals, ratio_marginals):
                mv = make(sv)
                assert abs(mv.probs.sum() - k) <= 1e-9
                assert check_fairness(mv.probs, sv.scores).max_violation <= 1e-9
                order = np.argsort(sv.scores)
                assert np.all(np.diff(mv.probs[order]) >= -1e-9)

    def test_errors(self):
        with pytest.raises(ValueError):
            ScoreVector([0.5, 0.6], 3)  # k > n
        with pytest.raises(ValueError):
            ScoreVector([0.5], 0)
        with pytest.raises(ValueError):
            ScoreVector([1.2], 1)
        with pytest.raises(ValueError):
            ScoreVector([-0.1], 1)

    def test_zero_score_candidate_keeps_ratio_finite_over_positives(self):
        mv = ratio_marginals(ScoreVector([0.0, 0.5], 1))
        value = maxmin_utility(mv.probs, [0.0, 0.5])
        assert math.isfinite(value)
        assert value == pytest.approx(mv.probs[1] / 0.5)


class TestSelectCohort:
    def test_degenerate_marginals(self):
        mv = linear_marginals(ScoreVector([1.0, 1.0, 0.0, 0.0], 2))
        for seed in range(50):
            cohort = select_cohort(mv, rng=seed)
            assert cohort.as_set() == {"c1", "c2"}

    def test_frequencies_match_marginals(self):
        mv = linear_marginals(EX1)
        freq = selection_frequencies(mv, 100_000, seed=19)
        assert abs(freq[3] - 0.925) < 0.01
        np.testing.assert_allclose(freq, mv.probs, atol=0.01)

    def test_top_scorer_is_always_selected(self):
        mv = ratio_marginals(EX2)
        freq = selection_frequencies(mv, 100_000, seed=21)
        assert freq[2] == 1.0  # probability-1 candidate in every cohort
        assert abs(freq[0] - 0.5) < 0.01
        assert abs(freq[1] - 0.5) < 0.01

    def test_cohort_size_is_always_k(self):
        gen = np.random.default_rng(23)
        for case in range(30):
            n = int(gen.integers(1, 10))
            k = int(gen.integers(1, n + 1))
            mv = linear_marginals(ScoreVector(gen.random(n), k))
            assert len(select_cohort(mv, rng=case)) == k
