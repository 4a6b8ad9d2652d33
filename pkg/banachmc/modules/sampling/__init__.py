from .estimators import (
    ErrorMeasurement,
    EstimatorOutput,
    StrongRateFit,
    fit_bias_rate,
    fit_rate_loglog,
    fit_strong_rates,
    mlmc_estimate,
    prefix_means,
    replicate_error,
    second_moment_mlmc,
    second_moment_slmc,
    slmc_estimate,
)
from .level_sampler import ConstantSampler, DiscreteFn, LevelSampler
from .seeding import ReplicateSeeder, as_seeder, experiment_key

__all__ = [
    "ConstantSampler",
    "DiscreteFn",
    "ErrorMeasurement",
    "EstimatorOutput",
    "LevelSampler",
    "ReplicateSeeder",
    "StrongRateFit",
    "as_seeder",
    "experiment_key",
    "fit_bias_rate",
    "fit_rate_loglog",
    "fit_strong_rates",
    "mlmc_estimate",
    "prefix_means",
    "replicate_error",
    "second_moment_mlmc",
    "second_moment_slmc",
    "slmc_estimate",
]
