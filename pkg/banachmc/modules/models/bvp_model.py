from __future__ import annotations

import warnings
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from loguru import logger
from scipy.integrate import IntegrationWarning, quad

from banachmc.common_values import BasisKind
from banachmc.exceptions import QuadratureError
from banachmc.modules.sampling import LevelSampler
from banachmc.modules.spaces import (
    NodalTensorFn,
    Partition,
    PiecewiseLinearFn,
    SingularitySpec,
    nodal_interpolate,
)
from banachmc.modules.spaces.fn_base import conjugate_fn
from banachmc.modules.theory import SpaceSpec

DEFAULT_ETA_MARGIN = 1e-2


@dataclass(frozen=True)
class BvpModel:
    """Random boundary value problem with manufactured solution |x - y|^(2-eta) - y^(2-eta)."""

    p: float = 1.5
    eta: float | None = None

    def __post_init__(self):
        if not 1.0 < self.p <= 2.0:
            raise ValueError(f"p must lie in (1, 2], got {self.p}")
        if self.eta is None:
            object.__setattr__(self, "eta", 1.0 + 1.0 / self.p - DEFAULT_ETA_MARGIN)
        if not 1.0 < self.eta < 2.0:
            raise ValueError(f"eta must lie in (1, 2), got {self.eta}")
        if not self.p < 1.0 / (self.eta - 1.0):
            raise ValueError(
                f"p={self.p} is outside the well-posedness window p < {1.0 / (self.eta - 1.0):.4g}"
            )

    @property
    def theory_rate(self) -> float:
        """Monte Carlo rate 1 - 1/p in L^2(Omega; W^(1,p))."""
        return 1.0 - 1.0 / self.p

    def space_spec(self, q: float = 2.0) -> SpaceSpec:
        # S1_0 on N cells: type constants grow like N^(1/p - 1/r)
        return SpaceSpec(p=self.p, q=q, a0=1.0, a1=1.0 / conjugate_fn(self.p), C_tau=1.0)


def _check_y(y) -> None:
    y = np.asarray(y)
    if np.any(y <= 0.0) or np.any(y >= 1.0):
        raise ValueError("The random parameter y must lie in (0, 1)")


def bvp_solution(x, y, eta: float):
    return np.abs(x - y) ** (2.0 - eta) - y ** (2.0 - eta)


def bvp_sample(model: BvpModel, y: float, partition: Partition) -> PiecewiseLinearFn:
    _check_y(y)
    return nodal_interpolate(lambda x: bvp_solution(x, y, model.eta), partition)


def bvp_sample_derivative(x, y, eta: float):
    diff = x - y
    return (2.0 - eta) * np.sign(diff) * np.abs(diff) ** (1.0 - eta)


def bvp_exact_mean(x, eta: float):
    return ((1.0 - x) ** (3.0 - eta) + x ** (3.0 - eta) - 1.0) / (3.0 - eta)


def bvp_exact_mean_derivative(x, eta: float):
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0.0) or np.any(x >= 1.0):
        raise ValueError("The mean derivative is evaluated on the open interval (0, 1)")
    value = x ** (2.0 - eta) - (1.0 - x) ** (2.0 - eta)
    return float(value) if value.ndim == 0 else value


class BvpMeanDerivative:
    """Derivative of the sample average (1/M) sum_i u_(y_i), evaluated in chunks of samples."""

    def __init__(self, ys: npt.ArrayLike, eta: float, chunk_size: int = 256):
        self.ys = np.asarray(ys, dtype=np.float64).ravel()
        if self.ys.size == 0:
            raise ValueError("The sample average needs at least one sample")
        self.eta = eta
        self.chunk_size = chunk_size

    @property
    def singularity(self) -> SingularitySpec:
        return SingularitySpec(self.ys, self.eta - 1.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        flat = x.ravel()
        total = np.zeros(flat.size)
        for start in range(0, self.ys.size, self.chunk_size):
            block = self.ys[start : start + self.chunk_size]
            total += bvp_sample_derivative(flat[:, None], block[None, :], self.eta).sum(axis=1)
        return (total / self.ys.size).reshape(x.shape)


class BvpSampler(LevelSampler):
    """Nodal interpolants of u_y on the level meshes, y ~ U(0, 1)."""

    basis_kind = BasisKind.NODAL

    def __init__(
        self,
        model: BvpModel,
        level_map: Callable[[int], Partition],
        level_min: int = 1,
        cost_exponent: float = 1.0,
    ):
        super().__init__(level_map, level_min, cost_exponent)
        self.model = model

    def draw(self, rng: np.random.Generator, size: int) -> npt.NDArray[np.float64]:
        return rng.random(size)

    def evaluate(self, level: int, params: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        nodes = self.level_space(level).nodes
        values = bvp_solution(nodes[None, :], params[:, None], self.model.eta)
        values[:, 0] = 0.0
        return values


def _reference_entry(x_i: float, x_j: float, eta: float, epsabs: float, epsrel: float) -> float:
    def integrand(y):
        return (abs(x_i - y) ** (2.0 - eta) - y ** (2.0 - eta)) * (
            abs(x_j - y) ** (2.0 - eta) - y ** (2.0 - eta)
        )

    edges = sorted({0.0, min(x_i, x_j), max(x_i, x_j), 1.0})
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        value, _ = quad(integrand, a, b, epsabs=epsabs, epsrel=epsrel, limit=200)
        total += value
    return total


def bvp_reference_second_moment(
    partition_ref: Partition,
    eta: float,
    epsabs: float = 1e-13,
    epsrel: float = 1e-10,
) -> NodalTensorFn:
    """Nodal matrix of E[u (x) u] with entries int_0^1 u_y(x_i) u_y(x_j) dy.

    Each entry integrates adaptively over the pieces cut at y = x_i and y = x_j.
    Row and column 0 vanish since u_y(0) = 0.
    """
    nodes = partition_ref.nodes
    size = nodes.size
    values = np.zeros((size, size))
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        for i in range(1, size):
            for j in range(i, size):
                try:
                    entry = _reference_entry(nodes[i], nodes[j], eta, epsabs, epsrel)
                except IntegrationWarning as err:
                    raise QuadratureError(
                        f"Reference second moment did not converge at entry ({i}, {j}): {err}",
                        index=(i, j),
                    ) from err
                values[i, j] = entry
                values[j, i] = entry
    logger.debug(f"Reference second moment assembled on {partition_ref}")
    return NodalTensorFn(partition_ref, values, BasisKind.NODAL)
