"""Maximum-likelihood inference for general pairwise comparison models."""

__version__ = "0.1.0"

from .data import Dataset, LatentScores, draw_latent_scores, load_csv, map_match_scores, sample_outcomes
from .diagnostics import model_constants, validate_model
from .graph import ComparisonGraph, GraphSamplerConfig, sample_graph
from .inference import (
    asymptotic_variance,
    benjamini_hochberg,
    confidence_interval,
    individual_error_bound,
    plugin_variance,
    z_test_difference,
)
from .mle import FitOptions, FitResult, fit, gradient, hessian, log_likelihood, profile_fit_threshold
from .models import OutcomeSupport, PairwiseModel, make_model
from .simulation import ExperimentConfig, qq_data, run_experiment

__all__ = [
    "ComparisonGraph", "Dataset", "ExperimentConfig", "FitOptions", "FitResult",
    "GraphSamplerConfig", "LatentScores", "OutcomeSupport", "PairwiseModel",
    "asymptotic_variance", "benjamini_hochberg", "confidence_interval",
    "draw_latent_scores", "fit", "gradient", "hessian", "individual_error_bound",
    "load_csv", "log_likelihood", "make_model", "map_match_scores", "model_constants",
    "plugin_variance", "profile_fit_threshold", "qq_data", "run_experiment",
    "sample_graph", "sample_outcomes", "validate_model", "z_test_difference",
]
