"""priorsketch: turn sketched datasets into statistical priors.

Analysts externalize what they believe about a domain by building a
small synthetic dataset (histogram clicks, region sampling, row
merging); this package derives parameter priors from that dataset by
bootstrap-resampling its complete rows and fitting distributions to the
estimate clouds, then simulates the implied response distribution so
the analyst can see whether the priors mean what they intended.
"""

from .dataset import ConnectPlan, Dataset, Entity, Selection
from .formula import ModelSpec, ParameterSpec, VariableSpec, format_model, parse_model
from .predictive import PredictiveConfig, kde, run_check, sample_predictors, simulate_response
from .priors import (BootstrapConfig, EstimateMatrix, PriorDistribution,
                     bootstrap_estimates, derive_priors, fit_prior, ols_fit,
                     sample_parameters)
from .snapshot import dump_snapshot, load_snapshot

__version__ = "0.1.0"

__all__ = [
    "BootstrapConfig",
    "ConnectPlan",
    "Dataset",
    "Entity",
    "EstimateMatrix",
    "ModelSpec",
    "ParameterSpec",
    "PredictiveConfig",
    "PriorDistribution",
    "Selection",
    "VariableSpec",
    "bootstrap_estimates",
    "derive_priors",
    "dump_snapshot",
    "fit_prior",
    "format_model",
    "kde",
    "load_snapshot",
    "ols_fit",
    "parse_model",
    "run_check",
    "sample_parameters",
    "sample_predictors",
    "simulate_response",
]
