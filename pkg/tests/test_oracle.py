import numpy as np
import pytest

from faircohort import (
    ScoreVector,
    linear_marginals,
    perturbation_oracle,
    ratio_marginals,
    weighted_sampling_baseline,
)

EX1 = ScoreVector([0.1, 0.3, 0.6, 0.9], 2)
EX2 = ScoreVector([0.5, 0.5, 1.0], 2)


class TestOnOptimalInputs:
    def test_no_linear_improvement_on_the_water_fill_solution(self):
        verdict = perturbation_oracle(EX1, linear_marginals(EX1), "linear",
                                      100_000, rng=1)
        assert not verdict.improved
        assert verdict.improved_by == 0.0

    def test_no_improvement_across_random_instances(self):
        gen = np.random.default_rng(2)
        for case in range(50):
            n = int(gen.integers(2, 9))
            k = int(gen.integers(1, n + 1))
            sv = ScoreVector(gen.random(n), k)
            assert not perturbation_oracle(sv, linear_marginals(sv), "linear",
                                           5000, rng=case).improved
            assert not perturbation_oracle(sv, ratio_marginals(sv), "maxmin",
                                           5000, rng=case).improved


class TestOnSuboptimalInputs:
    def test_weighted_baseline_is_beaten_on_both_objectives(self):
        base = weighted_sampling_baseline(EX2)
        for objective, optimum in (("maxmin", 1.0), ("linear", 1.5)):
            verdict = perturbation_oracle(EX2, base.marginals, objective,
                                          20_000, rng=3)
            assert verdict.improved
            assert verdict.witness is not None
            baseline_value = 3 / 4 if objective == "maxmin" else 11 / 8
            assert verdict.improved_by == pytest.approx(optimum - baseline_value, abs=1e-9)
            np.testing.assert_allclose(verdict.witness, [0.5, 0.5, 1.0], atol=1e-9)

    def test_detuned_marginals_report_the_detuning_loss(self):
        mv = linear_marginals(EX1)
        delta = 0.05
        detuned = mv.probs.copy()
        detuned[3] -= delta
        detuned[0] += delta
        verdict = perturbation_oracle(EX1, detuned, "linear", 20_000, rng=4)
        assert verdict.improved
        loss = delta * (EX1.scores[3] - EX1.scores[0])
        assert verdict.improved_by == pytest.approx(loss, abs=1e-6)

    def test_uniform_marginals_are_beaten_when_scores_spread(self):
        sv = ScoreVector([0.1, 0.2, 0.8, 0.9], 2)
        uniform = np.full(4, 0.5)
        verdict = perturbation_oracle(sv, uniform, "linear", 20_000, rng=5)
        assert verdict.improved


class TestValidation:
    def test_infeasible_marginals_rejected(self):
        with pytest.raises(ValueError):
            perturbation_oracle(EX1, [0.9, 0.9, 0.1, 0.1], "linear", 10, rng=0)
        with pytest.raises(ValueError):
            perturbation_oracle(EX1, [0.5, 0.5, 0.5, 0.9], "linear", 10, rng=0)

    def test_unknown_objective(self):
        with pytest.raises(ValueError):
            perturbation_oracle(EX1, linear_marginals(EX1), "entropy", 10, rng=0)

    def test_zero_attempts_still_runs_the_shift_families(self):
        base = weighted_sampling_baseline(EX2)
        verdict = perturbation_oracle(EX2, base.marginals, "maxmin", 0, rng=0)
        assert verdict.improved
