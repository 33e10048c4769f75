"""Sample-efficient estimation of photon indistinguishability in boson samplers."""

__version__ = "0.1.0"

from .exceptions import (BSBenchError, CollisionError, ConfigError, DimensionError, DomainError,
                         ParseError, SizeError)
from .permanent import (ModeSelection, distinguishable_probability, permanent, permanent_naive,
                        permanent_ryser, submatrix)
from .model import (OverlapModel, ProbabilityPolynomial, eval_poly, gram_matrix,
                    multiset_outcome_poly, outcome_poly, outcome_poly_fast, pattern_polys,
                    permutation_term)
from .likelihood import (EstimateReport, LogLikelihood, NormalizationPoly, SampleSet,
                         log_likelihood, maximize, mle_estimate, normalization,
                         normalization_exact, normalization_mc)
from .simulate import (REFERENCE_NOISE, NoiseConfig, exact_distribution, exact_sampler,
                       generate_noisy_samples, haar_unitary, mcmc_sampler, perturb_matrix)
from .benchmark import (AccuracyPoint, BudgetRow, accuracy_benchmark, cumulative_ladder,
                        error_budget)
from .monitor import MonitorPoint, RollingMonitor, WindowConfig, rolling_estimates
from .estimator import OverlapEstimator

__all__ = [
    "BSBenchError", "CollisionError", "ConfigError", "DimensionError", "DomainError",
    "ParseError", "SizeError",
    "ModeSelection", "distinguishable_probability", "permanent", "permanent_naive",
    "permanent_ryser", "submatrix",
    "OverlapModel", "ProbabilityPolynomial", "eval_poly", "gram_matrix", "multiset_outcome_poly",
    "outcome_poly", "outcome_poly_fast", "pattern_polys", "permutation_term",
    "EstimateReport", "LogLikelihood", "NormalizationPoly", "SampleSet", "log_likelihood",
    "maximize", "mle_estimate", "normalization", "normalization_exact", "normalization_mc",
    "REFERENCE_NOISE", "NoiseConfig", "exact_distribution", "exact_sampler",
    "generate_noisy_samples", "haar_unitary", "mcmc_sampler", "perturb_matrix",
    "AccuracyPoint", "BudgetRow", "accuracy_benchmark", "cumulative_ladder", "error_budget",
    "MonitorPoint", "RollingMonitor", "WindowConfig", "rolling_estimates",
    "OverlapEstimator",
]
