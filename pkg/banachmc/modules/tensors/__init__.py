from .injective_norm import (
    BallMaximizer,
    DualDiscretization,
    InjectiveNormResult,
    assemble_dual,
    discrete_crossnorm,
    injective_norm_alternating,
    injective_norm_bruteforce,
    injective_norm_multistart,
    linear_max_on_ball,
    weighted_norm,
)

__all__ = [
    "BallMaximizer",
    "DualDiscretization",
    "InjectiveNormResult",
    "assemble_dual",
    "discrete_crossnorm",
    "injective_norm_alternating",
    "injective_norm_bruteforce",
    "injective_norm_multistart",
    "linear_max_on_ball",
    "weighted_norm",
]
