from .functions import (
    NodalTensorFn,
    PiecewiseConstantFn,
    PiecewiseLinearFn,
    SingularitySpec,
)
from .interpolation import (
    cell_average_project,
    midpoint_interpolate,
    nodal_interpolate,
    prolong,
    prolong_tensor,
    prolongation_matrix,
    restrict_nodal_tensor,
    tensor_interpolate,
)
from .norms import (
    QuadratureRule,
    graded_tensor_rule,
    lp_norm_piecewise,
    lp_norm_quadrature,
    piece_breakpoints,
    tensor_lp_norm,
    w1p_seminorm,
)
from .partition import Partition, dyadic_level_map, make_partition

__all__ = [
    "NodalTensorFn",
    "Partition",
    "PiecewiseConstantFn",
    "PiecewiseLinearFn",
    "QuadratureRule",
    "SingularitySpec",
    "cell_average_project",
    "dyadic_level_map",
    "graded_tensor_rule",
    "lp_norm_piecewise",
    "lp_norm_quadrature",
    "make_partition",
    "midpoint_interpolate",
    "nodal_interpolate",
    "piece_breakpoints",
    "prolong",
    "prolong_tensor",
    "prolongation_matrix",
    "restrict_nodal_tensor",
    "tensor_interpolate",
    "tensor_lp_norm",
    "w1p_seminorm",
]
