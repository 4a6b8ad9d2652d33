from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Callable
from typing import Union

import numpy as np
import numpy.typing as npt

from banachmc.common_values import BasisKind
from banachmc.modules.spaces import (
    Partition,
    PiecewiseConstantFn,
    PiecewiseLinearFn,
    prolong,
)

DiscreteFn = Union[PiecewiseLinearFn, PiecewiseConstantFn]


class LevelSampler(ABC):
    """Level-indexed generator of discrete samples X_l driven by shared parameters.

    Subclasses draw the random parameters once and evaluate them on any level,
    so coupled samples at two levels come from the same realization.
    """

    basis_kind: BasisKind = BasisKind.NODAL

    def __init__(
        self,
        level_map: Callable[[int], Partition],
        level_min: int = 1,
        cost_exponent: float = 1.0,
    ):
        if level_min < 1:
            raise ValueError(f"level_min must be >= 1, got {level_min}")
        self.level_map = level_map
        self.level_min = level_min
        self.cost_exponent = cost_exponent

    @abstractmethod
    def draw(self, rng: np.random.Generator, size: int) -> npt.NDArray[np.float64]:
        raise NotImplementedError

    @abstractmethod
    def evaluate(self, level: int, params: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        """Coefficients of the samples for `params`, one row per sample."""
        raise NotImplementedError

    def level_space(self, level: int) -> Partition:
        if level < self.level_min:
            raise KeyError(f"level {level} is below the coarsest level {self.level_min}")
        return self.level_map(level)

    def dimension(self, level: int) -> int:
        n_cells = self.level_space(level).n_cells
        return n_cells + 1 if self.basis_kind == BasisKind.NODAL else n_cells

    def cost(self, level: int) -> float:
        return float(self.level_space(level).n_cells) ** self.cost_exponent

    def wrap(self, level: int, coefficients: npt.ArrayLike) -> DiscreteFn:
        partition = self.level_space(level)
        if self.basis_kind == BasisKind.NODAL:
            return PiecewiseLinearFn(partition, coefficients)
        return PiecewiseConstantFn(partition, coefficients)

    def sample_batch(
        self, level: int, rng: np.random.Generator, size: int
    ) -> npt.NDArray[np.float64]:
        return self.evaluate(level, self.draw(rng, size))

    def coupled_batch(
        self, level: int, rng: np.random.Generator, size: int
    ) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64] | None]:
        """Fine and coarse coefficients from the same draws; None stands for X_0 = 0."""
        params = self.draw(rng, size)
        fine = self.evaluate(level, params)
        if level == self.level_min:
            return fine, None
        return fine, self.evaluate(level - 1, params)

    def sample(self, level: int, rng: np.random.Generator) -> DiscreteFn:
        return self.wrap(level, self.sample_batch(level, rng, 1)[0])

    def coupled_sample(self, level: int, rng: np.random.Generator) -> tuple[DiscreteFn, DiscreteFn]:
        fine, coarse = self.coupled_batch(level, rng, 1)
        if coarse is None:
            return self.wrap(level, fine[0]), self.wrap(level, np.zeros(fine.shape[1]))
        return self.wrap(level, fine[0]), self.wrap(level - 1, coarse[0])


class ConstantSampler(LevelSampler):
    """Returns the same discrete function on every level, prolonged to the level mesh."""

    def __init__(
        self,
        fn: DiscreteFn,
        level_map: Callable[[int], Partition],
        level_min: int = 1,
        cost_exponent: float = 1.0,
    ):
        super().__init__(level_map, level_min, cost_exponent)
        self.fn = fn
        self.basis_kind = (
            BasisKind.NODAL if isinstance(fn, PiecewiseLinearFn) else BasisKind.CELL
        )

    def draw(self, rng: np.random.Generator, size: int) -> npt.NDArray[np.float64]:
        return rng.random(size)

    def evaluate(self, level: int, params: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        fn = prolong(self.fn, self.level_space(level))
        values = fn.nodal_values if isinstance(fn, PiecewiseLinearFn) else fn.cell_values
        return np.tile(values, (np.size(params), 1))
