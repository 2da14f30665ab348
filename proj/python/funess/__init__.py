"""Two-state process with memory of the first event."""

from ._core import (
    FunessError,
    Params,
    conditional_mutual_information,
    effective_diffusion,
    entropy_difference,
    gamma_divisor,
    intermediate_lambda,
    lambda_initial,
    memory_kernel,
    propagate_master,
    sample_trajectory,
    simulate_ensemble_summary,
    simulate_walk,
    stationary_correlation,
    stationary_marginal,
    walk_distribution,
    walk_moments,
    walk_variance_correlated,
)

__all__ = [
    "FunessError",
    "Params",
    "conditional_mutual_information",
    "effective_diffusion",
    "entropy_difference",
    "gamma_divisor",
    "intermediate_lambda",
    "lambda_initial",
    "memory_kernel",
    "propagate_master",
    "sample_trajectory",
    "simulate_ensemble_summary",
    "simulate_walk",
    "stationary_correlation",
    "stationary_marginal",
    "walk_distribution",
    "walk_moments",
    "walk_variance_correlated",
]
