"""FDR-controlled variable selection with multiple model-X knockoffs."""

__version__ = "0.1.0"

from .engines import DirectZSpec, StatisticTensor, direct_z, lasso_statistics, marginal_statistics
from .gaussian import (
    CovarianceModel,
    KnockoffFactors,
    equicorrelated_s,
    estimate_covariance,
    normalize_covariance,
    prepare_factors,
    sample_knockoffs,
)
from .harness import MonteCarloReport, ScenarioConfig, make_regression_scenario, run_scenario
from .selection import SelectionResult, WMatrix, build_w, evaluate_truth, threshold_scan

__all__ = [
    "CovarianceModel",
    "DirectZSpec",
    "KnockoffFactors",
    "MonteCarloReport",
    "ScenarioConfig",
    "SelectionResult",
    "StatisticTensor",
    "WMatrix",
    "build_w",
    "direct_z",
    "equicorrelated_s",
    "estimate_covariance",
    "evaluate_truth",
    "lasso_statistics",
    "make_regression_scenario",
    "marginal_statistics",
    "normalize_covariance",
    "prepare_factors",
    "run_scenario",
    "sample_knockoffs",
    "threshold_scan",
]
