import math

import numpy as np
import pytest

from faircohort import check_fairness, linear_utility, maxmin_utility, worst_case_ratio

EX2_SCORES = [0.5, 0.5, 1.0]
EX2_WEIGHTED = [0.625, 0.625, 0.75]  # weighted-sampling baseline marginals


class TestLinearUtility:
    def test_optimal_instance(self):
        assert abs(linear_utility([0.125, 0.325, 0.625, 0.925], [0.1, 0.3, 0.6, 0.9]) - 1.3175) < 1e-12

    def test_self_product(self):
        s = np.array([0.2, 0.5, 0.7])
        assert linear_utility(s, s) == pytest.approx((s ** 2).sum())

    def test_weighted_baseline_instance(self):
        assert linear_utility(EX2_WEIGHTED, EX2_SCORES) == pytest.approx(11 / 8, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            linear_utility([0.5], [0.5, 0.6])


class TestMaxminUtility:
    def test_optimal_instance(self):
        assert maxmin_utility([0.5, 0.5, 1.0], EX2_SCORES) == 1.0

    def test_weighted_baseline_instance(self):
        assert maxmin_utility(EX2_WEIGHTED, EX2_SCORES) == pytest.approx(3 / 4, abs=1e-12)

    def test_constant_ratio(self):
        s = np.array([0.4, 0.6, 0.8])
        k = 1
        p = s * (k / s.sum())
        assert maxmin_utility(p, s) == pytest.approx(k / s.sum(), abs=1e-12)

    def test_no_positive_scores_is_infinite(self):
        assert maxmin_utility([0.5, 0.5], [0.0, 0.0]) == math.inf


class TestWorstCaseRatio:
    def test_equal_vectors_score_one(self):
        value, u = worst_case_ratio([0.5, 0.5, 1.0], [0.5, 0.5, 1.0], 100, rng=0)
        assert value == pytest.approx(1.0, abs=1e-12)
        assert u is not None

    def test_weighted_baseline_worst_case_is_a_basis_vector(self):
        value, u = worst_case_ratio(EX2_WEIGHTED, EX2_SCORES, 500, rng=1)
        assert value == pytest.approx(3 / 4, abs=1e-9)
        # attained by putting all utility weight on the high scorer
        np.testing.assert_allclose(u, [0.0, 0.0, 1.0])

    def test_matches_min_ratio_on_random_pairs(self):
        gen = np.random.default_rng(2)
        for case in range(200):
            n = int(gen.integers(1, 7))
            s = gen.random(n) * 0.95 + 0.05
            p = gen.random(n)
            value, _ = worst_case_ratio(p, s, 200, rng=np.random.default_rng(case))
            assert value <= maxmin_utility(p, s) + 1e-12
            assert value >= maxmin_utility(p, s) - 1e-9

    def test_all_zero_scores_rejected(self):
        with pytest.raises(ValueError):
            worst_case_ratio([0.5], [0.0], 10, rng=0)


class TestCheckFairness:
    def test_exact_preservation_reports_no_violation(self):
        report = check_fairness([0.125, 0.325, 0.625, 0.925], [0.1, 0.3, 0.6, 0.9])
        assert report.max_violation <= 1e-12
        assert report.violating_pair is None
        assert report.epsilon_satisfied <= 1e-12

    def test_uniform_marginals_always_preserve(self):
        gen = np.random.default_rng(3)
        for _ in range(20):
            s = gen.random(6)
            report = check_fairness(np.full(6, 0.5), s)
            assert report.max_violation <= 0.0

    def test_violation_is_located(self):
        report = check_fairness([0.9, 0.1, 0.5], [0.5, 0.5, 0.5])
        assert report.max_violation == pytest.approx(0.8)
        assert set(report.violating_pair) == {0, 1}
        assert report.epsilon_satisfied == pytest.approx(0.8)

    def test_report_invariant(self):
        gen = np.random.default_rng(4)
        for _ in range(50):
            n = int(gen.integers(1, 9))
            report = check_fairness(gen.random(n), gen.random(n))
            assert report.max_violation <= report.epsilon_satisfied + 1e-12

    def test_permutation_invariance(self):
        gen = np.random.default_rng(5)
        p, s = gen.random(8), gen.random(8)
        base = check_fairness(p, s)
        for _ in range(10):
            perm = gen.permutation(8)
            other = check_fairness(p[perm], s[perm])
            assert other.max_violation == pytest.approx(base.max_violation, abs=1e-15)

    def test_single_candidate(self):
        report = check_fairness([1.0], [0.3])
        assert report.max_violation == 0.0
        assert report.violating_pair is None
