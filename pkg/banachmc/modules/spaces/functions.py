from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from banachmc.common_values import BasisKind
from banachmc.modules.spaces.partition import Partition


def _frozen_array(values, ndim: int) -> npt.NDArray[np.float64]:
    array = np.array(values, dtype=np.float64)
    if array.ndim != ndim:
        raise ValueError(f"Expected a {ndim}-dimensional array, got shape {array.shape}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PiecewiseLinearFn:
    """Continuous piecewise affine function stored by its nodal values."""

    partition: Partition
    nodal_values: npt.NDArray[np.float64] = field(repr=False)

    def __post_init__(self):
        values = _frozen_array(self.nodal_values, 1)
        if values.size != self.partition.n_cells + 1:
            raise ValueError(
                f"Expected {self.partition.n_cells + 1} nodal values, got {values.size}"
            )
        object.__setattr__(self, "nodal_values", values)

    @property
    def vanishes_at_origin(self) -> bool:
        return self.nodal_values[0] == 0.0

    def derivative(self) -> PiecewiseConstantFn:
        slopes = np.diff(self.nodal_values) / self.partition.widths
        return PiecewiseConstantFn(self.partition, slopes)

    def __call__(self, x):
        return np.interp(x, self.partition.nodes, self.nodal_values)

    def __add__(self, other: PiecewiseLinearFn) -> PiecewiseLinearFn:
        _check_same_partition(self.partition, other.partition)
        return PiecewiseLinearFn(self.partition, self.nodal_values + other.nodal_values)

    def __sub__(self, other: PiecewiseLinearFn) -> PiecewiseLinearFn:
        _check_same_partition(self.partition, other.partition)
        return PiecewiseLinearFn(self.partition, self.nodal_values - other.nodal_values)

    def __mul__(self, scalar: float) -> PiecewiseLinearFn:
        return PiecewiseLinearFn(self.partition, scalar * self.nodal_values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class PiecewiseConstantFn:
    partition: Partition
    cell_values: npt.NDArray[np.float64] = field(repr=False)

    def __post_init__(self):
        values = _frozen_array(self.cell_values, 1)
        if values.size != self.partition.n_cells:
            raise ValueError(
                f"Expected {self.partition.n_cells} cell values, got {values.size}"
            )
        object.__setattr__(self, "cell_values", values)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        cells = np.clip(
            np.searchsorted(self.partition.nodes, x, side="right") - 1,
            0,
            self.partition.n_cells - 1,
        )
        return self.cell_values[cells]

    def __add__(self, other: PiecewiseConstantFn) -> PiecewiseConstantFn:
        _check_same_partition(self.partition, other.partition)
        return PiecewiseConstantFn(self.partition, self.cell_values + other.cell_values)

    def __sub__(self, other: PiecewiseConstantFn) -> PiecewiseConstantFn:
        _check_same_partition(self.partition, other.partition)
        return PiecewiseConstantFn(self.partition, self.cell_values - other.cell_values)

    def __mul__(self, scalar: float) -> PiecewiseConstantFn:
        return PiecewiseConstantFn(self.partition, scalar * self.cell_values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class NodalTensorFn:
    """Function on the unit square in the tensorized nodal or cell basis."""

    partition: Partition
    values: npt.NDArray[np.float64] = field(repr=False)
    basis_kind: BasisKind = BasisKind.NODAL

    def __post_init__(self):
        values = _frozen_array(self.values, 2)
        basis_kind = BasisKind(self.basis_kind)
        size = self.partition.n_cells + (1 if basis_kind == BasisKind.NODAL else 0)
        if values.shape != (size, size):
            raise ValueError(
                f"{basis_kind.value} tensor on {self.partition.n_cells} cells "
                f"needs shape ({size}, {size}), got {values.shape}"
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "basis_kind", basis_kind)

    def __add__(self, other: NodalTensorFn) -> NodalTensorFn:
        _check_same_partition(self.partition, other.partition)
        return NodalTensorFn(self.partition, self.values + other.values, self.basis_kind)

    def __sub__(self, other: NodalTensorFn) -> NodalTensorFn:
        _check_same_partition(self.partition, other.partition)
        return NodalTensorFn(self.partition, self.values - other.values, self.basis_kind)

    def __mul__(self, scalar: float) -> NodalTensorFn:
        return NodalTensorFn(self.partition, scalar * self.values, self.basis_kind)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SingularitySpec:
    """Algebraic singularities |x - s|^(-exponent) located at `locations`."""

    locations: npt.NDArray[np.float64] = field(default_factory=lambda: np.empty(0))
    exponent: float = 0.0

    def __post_init__(self):
        locations = np.unique(np.asarray(self.locations, dtype=np.float64).ravel())
        if locations.size and (locations[0] < 0.0 or locations[-1] > 1.0):
            raise ValueError("Singularity locations must lie in [0, 1]")
        locations.setflags(write=False)
        object.__setattr__(self, "locations", locations)

    def weight_exponent(self, p: float) -> float:
        """Jacobi weight exponent -p*eta clipped to (-1, 0]."""
        kappa = -p * self.exponent
        if kappa <= -1.0:
            raise ValueError(
                f"|f|^{p} with a singularity of strength {self.exponent} is not integrable"
            )
        return min(kappa, 0.0)


def _check_same_partition(first: Partition, second: Partition) -> None:
    if first != second:
        raise ValueError("Discrete functions live on different partitions")
