"""Fairness-preserving cohort selection.

Select k of n scored candidates so that the selection probabilities of any
two candidates never differ by more than their scores do, while maximizing
either the expected sum of selected scores or the worst-case ratio of
selection probability to score. Offline solvers compute the optimal
marginals in closed form; streaming selectors reproduce them while keeping
only O(k) (ratio objective) or O(k + 1/eps) (linear objective, with eps
fairness slack) candidates on hold.
"""

from .accel import ENV_FLAG, NUMBA_ENABLED
from .baselines import WeightedBaseline, uniform_baseline, weighted_sampling_baseline
from .metrics import check_fairness, linear_utility, maxmin_utility, worst_case_ratio
from .model import (
    CandidateRecord,
    Cohort,
    FairnessReport,
    MarginalVector,
    PENDING,
    REJECTED,
    ScoreVector,
    StreamDecision,
)
from .offline import linear_marginals, ratio_marginals, select_cohort, selection_frequencies
from .online_linear import OnlineLinearSelector, group_of, rounded_scores
from .online_ratio import OnlineRatioSelector, ReservoirSample, reservoir_offer
from .oracle import OracleVerdict, perturbation_oracle
from .rng import SeededRng
from .rounding import RoundingResult, dependent_round, monte_carlo_means, round_nat, round_prob
from .simulate import EmpiricalMarginals, estimate_marginals
from .streams import generate_stream
from .waterfill import water_fill_down, water_fill_up

__version__ = "0.1.0"

__all__ = [
    "CandidateRecord",
    "Cohort",
    "EmpiricalMarginals",
    "ENV_FLAG",
    "FairnessReport",
    "MarginalVector",
    "NUMBA_ENABLED",
    "OnlineLinearSelector",
    "OnlineRatioSelector",
    "OracleVerdict",
    "PENDING",
    "REJECTED",
    "ReservoirSample",
    "RoundingResult",
    "ScoreVector",
    "SeededRng",
    "StreamDecision",
    "WeightedBaseline",
    "check_fairness",
    "dependent_round",
    "estimate_marginals",
    "generate_stream",
    "group_of",
    "linear_marginals",
    "linear_utility",
    "maxmin_utility",
    "monte_carlo_means",
    "perturbation_oracle",
    "ratio_marginals",
    "reservoir_offer",
    "round_nat",
    "round_prob",
    "rounded_scores",
    "select_cohort",
    "selection_frequencies",
    "uniform_baseline",
    "water_fill_down",
    "water_fill_up",
    "weighted_sampling_baseline",
    "worst_case_ratio",
]
