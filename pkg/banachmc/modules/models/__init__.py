from .bvp_model import (
    BvpMeanDerivative,
    BvpModel,
    BvpSampler,
    bvp_exact_mean,
    bvp_exact_mean_derivative,
    bvp_reference_second_moment,
    bvp_sample,
    bvp_sample_derivative,
    bvp_solution,
)
from .factory import make_level_sampler
from .fa_model import (
    FaModel,
    FaSampler,
    empirical_norm_moments,
    fa_antiderivative,
    fa_exact_mean,
    fa_exact_mean_antiderivative,
    fa_exact_second_moment,
    fa_norm_power,
    fa_sample,
    fa_value,
)

__all__ = [
    "BvpMeanDerivative",
    "BvpModel",
    "BvpSampler",
    "FaModel",
    "FaSampler",
    "bvp_exact_mean",
    "bvp_exact_mean_derivative",
    "bvp_reference_second_moment",
    "bvp_sample",
    "bvp_sample_derivative",
    "bvp_solution",
    "empirical_norm_moments",
    "fa_antiderivative",
    "fa_exact_mean",
    "fa_exact_mean_antiderivative",
    "fa_exact_second_moment",
    "fa_norm_power",
    "fa_sample",
    "fa_value",
    "make_level_sampler",
]
