"""Distributional policy learning with a fairness penalty."""

from fairpolicy.distributions import StepCdf, SupportInterval, ks_distance, mixture
from fairpolicy.estimation import TrainingSample, fit_plugin
from fairpolicy.functionals import SimilarityMeasure, TargetFunctional
from fairpolicy.objective import CondCdfArray, CovariateSpace, DecisionRule, omega
from fairpolicy.optimizer import OptimizerConfig, maximize
from fairpolicy.selection import LambdaGrid, select_lambda_budget, sweep

__all__ = [
    "CondCdfArray",
    "CovariateSpace",
    "DecisionRule",
    "LambdaGrid",
    "OptimizerConfig",
    "SimilarityMeasure",
    "StepCdf",
    "SupportInterval",
    "TargetFunctional",
    "TrainingSample",
    "fit_plugin",
    "ks_distance",
    "maximize",
    "mixture",
    "omega",
    "select_lambda_budget",
    "sweep",
]
