"""Approximate counting of objects that satisfy an expensive predicate."""

from .baselines import (grid_stratify, neyman_allocation, proportional_allocation, srs_estimate,
                        ssn_estimate, ssp_estimate, stratified_estimate)
from .core import (Budget, DataPoint, Dataset, DegenerateAdjustment, Estimate, EstimatorError,
                   exact_count, stratified_variance, wald_interval, wilson_interval)
from .harness import (ConfigError, ExperimentConfig, TrialRecord, load_csv, run_experiment,
                      summarize)
from .lss import LSSConfig, lss_budget, lss_estimate
from .lws import lws_estimate
from .predicates import (CountingOracle, HalfPlaneQuery, NeighborsQuery, NoiseTable,
                         NoisySkybandQuery, SkybandQuery)
from .quantification import QuantifyConfig, qlac_estimate, qlcc_estimate, qlsc_estimate
from .scorers import ScorerConfig
from .synth import NoiseSpec, generate_points

__all__ = [
    "Budget", "ConfigError", "CountingOracle", "DataPoint", "Dataset", "DegenerateAdjustment",
    "Estimate", "EstimatorError", "ExperimentConfig", "HalfPlaneQuery", "LSSConfig",
    "NeighborsQuery", "NoiseSpec", "NoiseTable", "NoisySkybandQuery", "QuantifyConfig",
    "ScorerConfig", "SkybandQuery", "TrialRecord", "exact_count", "generate_points",
    "grid_stratify", "load_csv", "lss_budget", "lss_estimate", "lws_estimate",
    "neyman_allocation", "proportional_allocation", "qlac_estimate", "qlcc_estimate",
    "qlsc_estimate", "run_experiment", "srs_estimate", "ssn_estimate", "ssp_estimate",
    "stratified_estimate", "stratified_variance", "summarize", "wald_interval",
    "wilson_interval",
]
