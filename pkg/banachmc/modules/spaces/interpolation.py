from __future__ import annotations

from collections.abc import Callable

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from banachmc.common_values import BasisKind
from banachmc.exceptions import NestednessError
from banachmc.modules.spaces.fn_base import evaluate2_fn, evaluate_fn
from banachmc.modules.spaces.functions import (
    NodalTensorFn,
    PiecewiseConstantFn,
    PiecewiseLinearFn,
)
from banachmc.modules.spaces.partition import Partition


def nodal_interpolate(
    f: Callable, partition: Partition, zero_at_origin: bool = True
) -> PiecewiseLinearFn:
    """Nodal interpolant; the S1_0 convention pins the value at 0 to zero."""
    nodes = partition.nodes
    values = np.zeros(nodes.size)
    if zero_at_origin:
        values[1:] = evaluate_fn(f, nodes[1:], offset=1)
    else:
        values[:] = evaluate_fn(f, nodes)
    return PiecewiseLinearFn(partition, values)


def cell_average_project(antiderivative: Callable, partition: Partition) -> PiecewiseConstantFn:
    primitive = evaluate_fn(antiderivative, partition.nodes)
    return PiecewiseConstantFn(partition, np.diff(primitive) / partition.widths)


def midpoint_interpolate(f: Callable, partition: Partition) -> PiecewiseConstantFn:
    return PiecewiseConstantFn(partition, evaluate_fn(f, partition.midpoints, "cell"))


def tensor_interpolate(
    f2: Callable,
    partition: Partition,
    basis_kind: BasisKind | str = BasisKind.NODAL,
    zero_at_origin: bool = True,
) -> NodalTensorFn:
    basis_kind = BasisKind(basis_kind)
    if basis_kind == BasisKind.NODAL:
        points = partition.nodes
    else:
        points = partition.midpoints
    x, x_prime = np.meshgrid(points, points, indexing="ij")
    if basis_kind == BasisKind.NODAL and zero_at_origin:
        values = np.zeros_like(x)
        values[1:, 1:] = evaluate2_fn(f2, x[1:, 1:], x_prime[1:, 1:], offset=(1, 1))
    else:
        values = evaluate2_fn(f2, x, x_prime)
    return NodalTensorFn(partition, values, basis_kind)


def _check_nested(coarse: Partition, fine: Partition) -> npt.NDArray[np.int64]:
    positions = np.searchsorted(fine.nodes, coarse.nodes)
    positions = np.clip(positions, 0, fine.nodes.size - 1)
    below = np.clip(positions - 1, 0, fine.nodes.size - 1)
    closest = np.where(
        np.abs(fine.nodes[below] - coarse.nodes) < np.abs(fine.nodes[positions] - coarse.nodes),
        below,
        positions,
    )
    if not np.allclose(fine.nodes[closest], coarse.nodes, rtol=0.0, atol=1e-12):
        raise NestednessError(
            f"Partition with {coarse.n_cells} cells is not nested in the one "
            f"with {fine.n_cells} cells"
        )
    return closest


def prolongation_matrix(
    coarse: Partition, fine: Partition, basis_kind: BasisKind | str = BasisKind.NODAL
) -> sp.csr_matrix:
    """Sparse map from coarse to fine coefficients on nested partitions."""
    basis_kind = BasisKind(basis_kind)
    _check_nested(coarse, fine)
    if basis_kind == BasisKind.NODAL:
        cells = np.clip(
            np.searchsorted(coarse.nodes, fine.nodes, side="right") - 1,
            0,
            coarse.n_cells - 1,
        )
        left = coarse.nodes[cells]
        theta = (fine.nodes - left) / coarse.widths[cells]
        rows = np.repeat(np.arange(fine.nodes.size), 2)
        cols = np.column_stack((cells, cells + 1)).ravel()
        data = np.column_stack((1.0 - theta, theta)).ravel()
        shape = (fine.nodes.size, coarse.nodes.size)
    else:
        cells = np.searchsorted(coarse.nodes, fine.midpoints, side="right") - 1
        rows = np.arange(fine.n_cells)
        cols = cells
        data = np.ones(fine.n_cells)
        shape = (fine.n_cells, coarse.n_cells)
    matrix = sp.coo_matrix((data, (rows, cols)), shape=shape).tocsr()
    matrix.eliminate_zeros()
    return matrix


def prolong(fn: PiecewiseLinearFn | PiecewiseConstantFn, fine: Partition):
    if fn.partition == fine:
        return fn
    if isinstance(fn, PiecewiseLinearFn):
        matrix = prolongation_matrix(fn.partition, fine, BasisKind.NODAL)
        return PiecewiseLinearFn(fine, matrix @ fn.nodal_values)
    matrix = prolongation_matrix(fn.partition, fine, BasisKind.CELL)
    return PiecewiseConstantFn(fine, matrix @ fn.cell_values)


def prolong_tensor(fn: NodalTensorFn, fine: Partition) -> NodalTensorFn:
    if fn.partition == fine:
        return fn
    matrix = prolongation_matrix(fn.partition, fine, fn.basis_kind)
    values = matrix @ (matrix @ fn.values).T
    return NodalTensorFn(fine, values.T, fn.basis_kind)


def restrict_nodal_tensor(fn: NodalTensorFn, coarse: Partition) -> NodalTensorFn:
    """Keep the entries of a nodal tensor that sit on the nodes of `coarse`."""
    if fn.basis_kind != BasisKind.NODAL:
        raise ValueError("Restriction by injection needs a nodal tensor")
    index = _check_nested(coarse, fn.partition)
    return NodalTensorFn(coarse, fn.values[np.ix_(index, index)], BasisKind.NODAL)
