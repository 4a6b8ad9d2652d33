from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from loguru import logger
from scipy.special import xlogy

from banachmc.common_values import BasisKind, EtaRule, Representation
from banachmc.modules.sampling import LevelSampler, ReplicateSeeder
from banachmc.modules.spaces import (
    Partition,
    PiecewiseConstantFn,
    cell_average_project,
    midpoint_interpolate,
)
from banachmc.modules.theory import SpaceSpec

DEFAULT_ETA_MARGIN = 1e-2


@dataclass(frozen=True)
class FaModel:
    """Function approximation of u(x) = (x + y)^-eta, y ~ U(0, 1)."""

    p: float = 1.0
    q: float = 1.5
    eta: float | None = None
    eta_rule: EtaRule = EtaRule.SHARP

    def __post_init__(self):
        if not 1.0 <= self.p <= 2.0:
            raise ValueError(f"p must lie in [1, 2], got {self.p}")
        if not 1.0 < self.q <= 2.0:
            raise ValueError(f"q must lie in (1, 2], got {self.q}")
        object.__setattr__(self, "eta_rule", EtaRule(self.eta_rule))
        if self.eta is None:
            if self.eta_rule == EtaRule.FIXED:
                raise ValueError("A fixed eta rule needs an explicit eta")
            object.__setattr__(self, "eta", 1.0 / self.p + 1.0 / self.q - DEFAULT_ETA_MARGIN)
        if not 0.0 < self.eta < 2.0:
            raise ValueError(f"eta must lie in (0, 2), got {self.eta}")
        if not self.eta < 1.0 / self.p + 1.0 / self.q:
            raise ValueError(
                f"eta={self.eta} gives no L^q(Omega; L^p) membership for p={self.p}, q={self.q}"
            )

    @property
    def alpha(self) -> float:
        return min(1.0, 1.0 - self.eta + 1.0 / self.p)

    @property
    def b0(self) -> float:
        return 1.0 / self.p - self.eta

    @property
    def b1(self) -> float:
        return 1.0

    def beta(self, r: float) -> float:
        return self.b0 + self.b1 / r

    @property
    def q_hat(self) -> float:
        """sup{s in [q, 2] : 1/s > eta - 1/p}"""
        threshold = self.eta - 1.0 / self.p
        if threshold <= 0.5:
            return 2.0
        return max(self.q, min(2.0, 1.0 / threshold))

    @property
    def second_moment_q_hat(self) -> float:
        """sup{r in [q, 2] : 1/(2r) + 1/p > 1}"""
        threshold = 1.0 - 1.0 / self.p
        if threshold <= 0.25:
            return 2.0
        return max(self.q, min(2.0, 0.5 / threshold))

    def space_spec(self) -> SpaceSpec:
        # L^p has type min(p, 2) = p; the level spaces add no dimension dependence
        return SpaceSpec(p=min(self.p, self.q), q=self.q, q_tilde=self.q_hat, a0=0.0, a1=0.0)

    @property
    def theory_rate(self) -> float:
        if self.eta_rule == EtaRule.SHARP:
            return 1.0 - 1.0 / self.q
        return 1.0 - 1.0 / self.q_hat

    def check_second_moment(self) -> None:
        if self.eta != 1.0:
            raise ValueError(f"The closed-form second moment needs eta = 1, got {self.eta}")
        if not 1.0 / (2.0 * self.q) + 1.0 / self.p > 1.0:
            raise ValueError(
                f"(p, q) = ({self.p}, {self.q}) violates 1/(2q) + 1/p > 1, "
                "the second moment is not q-integrable"
            )


def _check_y(y) -> None:
    y = np.asarray(y)
    if np.any(y <= 0.0) or np.any(y >= 1.0):
        raise ValueError("The random parameter y must lie in (0, 1)")


def fa_value(x, y, eta: float):
    return (x + y) ** -eta


def fa_antiderivative(x, y, eta: float):
    if eta == 1.0:
        return np.log(x + y)
    return (x + y) ** (1.0 - eta) / (1.0 - eta)


def fa_sample(
    model: FaModel,
    y: float,
    partition: Partition,
    representation: Representation | str = Representation.CELL_AVERAGE,
) -> PiecewiseConstantFn:
    _check_y(y)
    if Representation(representation) == Representation.CELL_AVERAGE:
        return cell_average_project(lambda x: fa_antiderivative(x, y, model.eta), partition)
    return midpoint_interpolate(lambda x: fa_value(x, y, model.eta), partition)


def _check_positive(x) -> npt.NDArray[np.float64]:
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0.0):
        raise ValueError("The exact moments are defined for x > 0")
    return x


def _as_output(value: npt.NDArray[np.float64]):
    return float(value) if value.ndim == 0 else value


def fa_exact_mean(x, eta: float):
    x = _check_positive(x)
    if eta == 1.0:
        return _as_output(np.log((x + 1.0) / x))
    return _as_output(((x + 1.0) ** (1.0 - eta) - x ** (1.0 - eta)) / (1.0 - eta))


def fa_exact_mean_antiderivative(x, eta: float):
    """Antiderivative of E[u] vanishing at x = 0."""
    x = np.asarray(x, dtype=np.float64)
    if eta == 1.0:
        return _as_output(xlogy(x + 1.0, x + 1.0) - xlogy(x, x))
    if eta == 2.0:
        raise ValueError("eta = 2 gives a non-integrable mean")
    return _as_output(
        ((x + 1.0) ** (2.0 - eta) - x ** (2.0 - eta) - 1.0) / ((1.0 - eta) * (2.0 - eta))
    )


def fa_exact_second_moment(x, x_prime):
    """E[u(x) u(x')] for eta = 1."""
    x = _check_positive(x)
    x_prime = _check_positive(x_prime)
    x, x_prime = np.broadcast_arrays(x, x_prime)
    d = x_prime - x
    diagonal = 1.0 / x - 1.0 / (x + 1.0)
    near = np.abs(d) <= 1e-12 * np.maximum(x, x_prime)
    safe_d = np.where(near, 1.0, d)
    off_diagonal = (np.log1p(safe_d / x) - np.log1p(safe_d / (x + 1.0))) / safe_d
    return _as_output(np.where(near, diagonal, off_diagonal))


class FaSampler(LevelSampler):
    basis_kind = BasisKind.CELL

    def __init__(
        self,
        model: FaModel,
        level_map: Callable[[int], Partition],
        level_min: int = 1,
        cost_exponent: float = 1.0,
        representation: Representation | str = Representation.CELL_AVERAGE,
    ):
        super().__init__(level_map, level_min, cost_exponent)
        self.model = model
        self.representation = Representation(representation)

    def draw(self, rng: np.random.Generator, size: int) -> npt.NDArray[np.float64]:
        return rng.random(size)

    def evaluate(self, level: int, params: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        partition = self.level_space(level)
        y = params[:, None]
        if self.representation == Representation.MIDPOINT:
            return fa_value(partition.midpoints[None, :], y, self.model.eta)
        primitive = fa_antiderivative(partition.nodes[None, :], y, self.model.eta)
        return np.diff(primitive, axis=1) / partition.widths[None, :]


def fa_norm_power(y, p: float, eta: float):
    """||u_y||_{L^p(0, 1)}^p in closed form."""
    s = eta * p
    if s == 1.0:
        return np.log((1.0 + y) / y)
    return ((1.0 + y) ** (1.0 - s) - y ** (1.0 - s)) / (1.0 - s)


def empirical_norm_moments(
    model: FaModel,
    n_draws: int = 10_000,
    seed: int = 0,
    perturbations: tuple[float, ...] = (0.0, 0.005, 0.0099),
) -> dict[float, float]:
    """Empirical E||u||_{L^p}^q under eta perturbations towards 1/p + 1/q; logs only."""
    ys = ReplicateSeeder(seed, "membership").generator().random(n_draws)
    moments = {}
    for delta in perturbations:
        eta = model.eta + delta
        norms = fa_norm_power(ys, model.p, eta) ** (1.0 / model.p)
        moments[eta] = float(np.mean(norms**model.q))
        logger.info(
            f"eta={eta:.4f}: empirical E||u||^{model.q} = {moments[eta]:.4e} "
            f"(critical eta {1.0 / model.p + 1.0 / model.q:.4f})"
        )
    return moments
