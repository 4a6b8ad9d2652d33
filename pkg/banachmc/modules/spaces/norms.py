from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
from loguru import logger

from banachmc.common_values import GEOMETRIC_DEPTH, MAX_SPLIT_POINTS, BasisKind
from banachmc.exceptions import QuadratureError
from banachmc.modules.spaces.fn_base import (
    evaluate2_fn,
    evaluate_fn,
    gauss_panel_fn,
    geometric_breakpoints_fn,
    graded_nodes_fn,
    thin_evenly_fn,
)
from banachmc.modules.spaces.functions import (
    NodalTensorFn,
    PiecewiseConstantFn,
    PiecewiseLinearFn,
    SingularitySpec,
)


def _check_exponent(p: float) -> None:
    if not p >= 1.0:
        raise ValueError(f"Norm exponent must be >= 1, got {p}")


def _power_mean(measures: npt.NDArray, values: npt.NDArray, p: float) -> float:
    if np.isinf(p):
        return float(np.max(np.abs(values), initial=0.0))
    scale = float(np.max(np.abs(values), initial=0.0))
    if scale == 0.0:
        return 0.0
    return scale * float(np.sum(measures * np.abs(values / scale) ** p)) ** (1.0 / p)


def w1p_seminorm(v: PiecewiseLinearFn, p: float) -> float:
    """Exact L^p norm of the piecewise constant derivative of `v`."""
    _check_exponent(p)
    slopes = np.diff(v.nodal_values) / v.partition.widths
    return _power_mean(v.partition.widths, slopes, p)


def lp_norm_piecewise(v: PiecewiseConstantFn | NodalTensorFn, p: float) -> float:
    _check_exponent(p)
    if isinstance(v, PiecewiseConstantFn):
        return _power_mean(v.partition.widths, v.cell_values, p)
    if v.basis_kind != BasisKind.CELL:
        raise ValueError("lp_norm_piecewise expects a cell tensor")
    widths = v.partition.widths
    return _power_mean(np.outer(widths, widths), v.values, p)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Points and weights with  int |f|^p  ~  sum(weights * |f(points)|^p)."""

    points: npt.NDArray[np.float64] = field(repr=False)
    weights: npt.NDArray[np.float64] = field(repr=False)

    @classmethod
    def composite(
        cls,
        breakpoints: npt.ArrayLike,
        nodes_per_cell: int = 8,
        singular_points: npt.ArrayLike = (),
        kappa: float = 0.0,
    ) -> QuadratureRule:
        """Gauss rule per cell, Gauss-Jacobi on cells ending at a singular point."""
        breakpoints = np.asarray(breakpoints, dtype=np.float64)
        left, right = breakpoints[:-1], breakpoints[1:]
        singular_points = np.asarray(singular_points, dtype=np.float64)
        if kappa != 0.0 and singular_points.size:
            at_left = np.isin(left, singular_points)
            at_right = np.isin(right, singular_points)
        else:
            at_left = np.zeros(left.size, dtype=bool)
            at_right = np.zeros(left.size, dtype=bool)

        points, weights = [], []
        for flag_left, flag_right in ((False, False), (True, False), (False, True), (True, True)):
            mask = (at_left == flag_left) & (at_right == flag_right)
            if not np.any(mask):
                continue
            t, w = gauss_panel_fn(
                -1.0,
                1.0,
                nodes_per_cell,
                kappa if flag_left else 0.0,
                kappa if flag_right else 0.0,
            )
            half = 0.5 * (right[mask] - left[mask])
            points.append(left[mask, None] + half[:, None] * (1.0 + t))
            weights.append(half[:, None] * w)
        return cls(np.concatenate(points).ravel(), np.concatenate(weights).ravel())

    @classmethod
    def geometric(
        cls, depth: int = GEOMETRIC_DEPTH, nodes_per_cell: int = 8, kappa: float = 0.0
    ) -> QuadratureRule:
        """Cells [2^-k-1, 2^-k] down to 2^-depth; the first cell carries x^kappa."""
        return cls.composite(geometric_breakpoints_fn(depth), nodes_per_cell, (0.0,), kappa)

    def integrate_power(self, values: npt.NDArray[np.float64], p: float) -> float:
        total = float(np.sum(self.weights * np.abs(values) ** p))
        if not np.isfinite(total):
            raise QuadratureError("non-finite partial sum in quadrature")
        return total

    def lp_norm(self, f: Callable, p: float) -> float:
        return self.integrate_power(evaluate_fn(f, self.points, "quadrature point"), p) ** (
            1.0 / p
        )


def piece_breakpoints(locations: npt.ArrayLike, cells_per_piece: int) -> npt.NDArray[np.float64]:
    """Split [0, 1] at `locations`, then each piece into equal cells."""
    edges = np.unique(np.concatenate(([0.0, 1.0], np.asarray(locations, dtype=np.float64))))
    steps = np.linspace(0.0, 1.0, cells_per_piece + 1)[:-1]
    inner = edges[:-1, None] + np.diff(edges)[:, None] * steps
    return np.concatenate((inner.ravel(), [1.0]))


def lp_norm_quadrature(
    f: Callable,
    p: float,
    singularities: SingularitySpec | None = None,
    cells_per_piece: int = 16,
    nodes_per_cell: int = 8,
    max_doublings: int = 4,
    rtol: float = 1e-9,
) -> float:
    """L^p(0, 1) norm of `f` by composite Gauss-Legendre / Gauss-Jacobi rules.

    Args:
        f: Vectorized or scalar callable on (0, 1).
        p: Norm exponent, p >= 1.
        singularities: Points where |f| behaves like |x - s|^(-exponent).
        cells_per_piece: Cells in each piece between consecutive singular points.
        nodes_per_cell: Gauss nodes per cell, doubled until two refinements agree.
        max_doublings: Bound on the number of doublings of `nodes_per_cell`.
        rtol: Relative agreement that stops the doubling.

    Returns:
        float: The approximated norm.
    """
    _check_exponent(p)
    if cells_per_piece < 1 or nodes_per_cell < 1:
        raise ValueError("cells_per_piece and nodes_per_cell must be positive")
    if singularities is None:
        singularities = SingularitySpec()
    kappa = singularities.weight_exponent(p)
    locations = singularities.locations
    if locations.size > MAX_SPLIT_POINTS:
        logger.warning(
            f"Thinning {locations.size} singular points to {MAX_SPLIT_POINTS} split points"
        )
        locations = thin_evenly_fn(locations, MAX_SPLIT_POINTS)
    breakpoints = piece_breakpoints(locations, cells_per_piece)

    previous = None
    n = nodes_per_cell
    for _ in range(max_doublings + 1):
        rule = QuadratureRule.composite(breakpoints, n, locations, kappa)
        current = rule.integrate_power(evaluate_fn(f, rule.points, "quadrature point"), p)
        if previous is not None and abs(current - previous) <= rtol * abs(current):
            logger.debug(f"Quadrature converged with {n} nodes per cell")
            break
        previous = current
        n *= 2
    else:
        if max_doublings > 0:
            logger.warning(
                f"Quadrature did not reach rtol={rtol} after {max_doublings} doublings"
            )
    return current ** (1.0 / p)


def graded_tensor_rule(
    n_cells: int, nodes_per_cell: int = 4, skip_axis_cells: bool = True
) -> QuadratureRule:
    """One-dimensional factor of the tensor Gauss rule on graded cells (k/n)^2."""
    breakpoints = graded_nodes_fn(n_cells)
    if skip_axis_cells:
        breakpoints = breakpoints[1:]
    return QuadratureRule.composite(breakpoints, nodes_per_cell)


def tensor_lp_norm(
    f2: Callable,
    p: float,
    rule: QuadratureRule,
    second_rule: QuadratureRule | None = None,
) -> float:
    """L^p norm over the square by the tensor product of one-dimensional rules."""
    _check_exponent(p)
    second = rule if second_rule is None else second_rule
    x, y = np.meshgrid(rule.points, second.points, indexing="ij")
    values = evaluate2_fn(f2, x, y)
    total = float(np.sum(np.outer(rule.weights, second.weights) * np.abs(values) ** p))
    if not np.isfinite(total):
        raise QuadratureError("non-finite partial sum in tensor quadrature")
    return total ** (1.0 / p)
