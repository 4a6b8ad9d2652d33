from .allocation import (
    AllocationPlan,
    CostExponent,
    PlanInputs,
    RateModel,
    ceil_count,
    choose_finest_level,
    choose_r_dim_dep,
    choose_r_minkowski,
    fixed_r_cost_exponent,
    level_sum,
    level_sum_asymptote,
    mlmc_case,
    mlmc_plan_dim_dep,
    mlmc_plan_minkowski,
    predicted_cost_exponent,
    schedule_samples,
    slmc_constant_bundle,
    slmc_error_bound,
    slmc_plan,
    slmc_samples,
)
from .rademacher import (
    SpaceSpec,
    conjugate,
    f_alpha_ell,
    kahane_K_q1,
    khintchine_B,
    lp_seq_slmc_samples,
    lp_seq_space_spec,
    type_constant_lp_seq,
)

__all__ = [
    "AllocationPlan",
    "CostExponent",
    "PlanInputs",
    "RateModel",
    "SpaceSpec",
    "ceil_count",
    "choose_finest_level",
    "choose_r_dim_dep",
    "choose_r_minkowski",
    "conjugate",
    "f_alpha_ell",
    "fixed_r_cost_exponent",
    "kahane_K_q1",
    "khintchine_B",
    "level_sum",
    "level_sum_asymptote",
    "lp_seq_slmc_samples",
    "lp_seq_space_spec",
    "mlmc_case",
    "mlmc_plan_dim_dep",
    "mlmc_plan_minkowski",
    "predicted_cost_exponent",
    "schedule_samples",
    "slmc_constant_bundle",
    "slmc_error_bound",
    "slmc_plan",
    "slmc_samples",
    "type_constant_lp_seq",
]
