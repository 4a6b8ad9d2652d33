from __future__ import annotations

import time
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
import numpy.typing as npt
from loguru import logger

from banachmc.common_values import Regime
from banachmc.exceptions import EstimationError, EvaluationError
from banachmc.modules.sampling.level_sampler import LevelSampler
from banachmc.modules.sampling.seeding import ReplicateSeeder, as_seeder
from banachmc.modules.spaces import NodalTensorFn, Partition, prolongation_matrix
from banachmc.modules.theory import AllocationPlan

DEFAULT_CHUNK = 2048


@dataclass(frozen=True, eq=False)
class EstimatorOutput:
    estimate: Any
    plan: AllocationPlan | None
    samples_drawn: tuple[int, ...]
    wall_cost: float
    wall_seconds: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class ErrorMeasurement:
    per_replicate_errors: tuple[float, ...]
    q_outer: float = 2.0

    def __post_init__(self):
        if not self.per_replicate_errors:
            raise ValueError("An error measurement needs at least one replicate")
        if not self.q_outer >= 1.0:
            raise ValueError(f"q_outer must be >= 1, got {self.q_outer}")

    @property
    def aggregated(self) -> float:
        errors = np.asarray(self.per_replicate_errors, dtype=np.float64)
        return float(np.mean(errors**self.q_outer) ** (1.0 / self.q_outer))

    @property
    def K(self) -> int:
        return len(self.per_replicate_errors)


class StrongRateFit(NamedTuple):
    b0: float
    b1: float
    C_beta: float
    betas: dict[float, float]


def _chunks(M: int, chunk_size: int):
    for start in range(0, M, chunk_size):
        yield start, min(chunk_size, M - start)


def _sampler_call(function: Callable, level: int, start: int, *args):
    try:
        return function(*args)
    except (EvaluationError, ArithmeticError, ValueError) as err:
        raise EstimationError(
            f"Sampler failed at level {level} in the batch starting at sample {start}: {err}",
            level=level,
            sample=start,
        ) from err


def _level_sums(
    sampler: LevelSampler,
    level: int,
    M: int,
    rng: np.random.Generator,
    coupled: bool,
    second: bool,
    chunk_size: int,
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64] | None]:
    """Sums of fine and coarse coefficients (or their outer products) over M samples."""
    fine_sum = None
    coarse_sum = None
    for start, size in _chunks(M, chunk_size):
        if coupled:
            fine, coarse = _sampler_call(sampler.coupled_batch, level, start, level, rng, size)
        else:
            fine = _sampler_call(sampler.sample_batch, level, start, level, rng, size)
            coarse = None
        fine_part = fine.T @ fine if second else fine.sum(axis=0)
        fine_sum = fine_part if fine_sum is None else fine_sum + fine_part
        if coarse is not None:
            coarse_part = coarse.T @ coarse if second else coarse.sum(axis=0)
            coarse_sum = coarse_part if coarse_sum is None else coarse_sum + coarse_part
    return fine_sum, coarse_sum


def _lift(values: npt.NDArray, source: Partition, target: Partition, sampler: LevelSampler, second: bool):
    if source == target:
        return values
    matrix = prolongation_matrix(source, target, sampler.basis_kind)
    if second:
        return matrix @ (matrix @ values).T
    return matrix @ values


def _check_samples(M: int) -> None:
    if isinstance(M, bool) or int(M) != M or M < 1:
        raise ValueError(f"Sample count must be a positive integer, got {M}")


def _single_level(
    sampler: LevelSampler,
    level: int,
    M: int,
    seed: ReplicateSeeder | int,
    replicate: int,
    second: bool,
    chunk_size: int,
) -> EstimatorOutput:
    _check_samples(M)
    started = time.perf_counter()
    rng = as_seeder(seed).generator(replicate, level)
    total, _ = _level_sums(sampler, level, M, rng, False, second, chunk_size)
    mean = total / M
    if second:
        estimate = NodalTensorFn(
            sampler.level_space(level), 0.5 * (mean + mean.T), sampler.basis_kind
        )
    else:
        estimate = sampler.wrap(level, mean)
    return EstimatorOutput(
        estimate,
        None,
        (int(M),),
        M * sampler.cost(level),
        time.perf_counter() - started,
    )


def _multilevel(
    sampler: LevelSampler,
    plan: AllocationPlan,
    seed: ReplicateSeeder | int,
    replicate: int,
    second: bool,
    chunk_size: int,
) -> EstimatorOutput:
    if plan.regime != Regime.MLMC:
        raise ValueError(f"Multilevel estimation needs an mlmc plan, got {plan.regime.value}")
    if plan.levels[0] != sampler.level_min:
        raise ValueError(
            f"Plan starts at level {plan.levels[0]}, sampler at level {sampler.level_min}"
        )
    started = time.perf_counter()
    seeder = as_seeder(seed)
    finest = sampler.level_space(plan.L)
    total = None
    cost = 0.0
    for level, M in zip(plan.levels, plan.M):
        _check_samples(M)
        rng = seeder.generator(replicate, level)
        fine_sum, coarse_sum = _level_sums(sampler, level, M, rng, True, second, chunk_size)
        difference = _lift(fine_sum, sampler.level_space(level), finest, sampler, second)
        if coarse_sum is not None:
            difference = difference - _lift(
                coarse_sum, sampler.level_space(level - 1), finest, sampler, second
            )
        difference = difference / M
        total = difference if total is None else total + difference
        cost += M * sampler.cost(level)
        logger.debug(f"Level {level}: {M} coupled samples")

    if second:
        estimate = NodalTensorFn(finest, 0.5 * (total + total.T), sampler.basis_kind)
    else:
        estimate = sampler.wrap(plan.L, total)
    return EstimatorOutput(
        estimate, plan, tuple(plan.M), cost, time.perf_counter() - started
    )


def slmc_estimate(
    sampler: LevelSampler,
    level: int,
    M: int,
    seed: ReplicateSeeder | int,
    replicate: int = 0,
    chunk_size: int = DEFAULT_CHUNK,
) -> EstimatorOutput:
    """Average of M independent samples at one level."""
    return _single_level(sampler, level, M, seed, replicate, False, chunk_size)


def mlmc_estimate(
    sampler: LevelSampler,
    plan: AllocationPlan,
    seed: ReplicateSeeder | int,
    replicate: int = 0,
    chunk_size: int = DEFAULT_CHUNK,
) -> EstimatorOutput:
    """Telescoping sum of level averages of X_l - X_(l-1), prolonged to the finest mesh.

    Args:
        sampler: Coupled sampler whose coarsest level matches the plan.
        plan: Multilevel plan giving M per level.
        seed: Seeder or integer seed; level l reads the stream (replicate, l).
        replicate: Replicate index selecting independent streams.
        chunk_size: Samples evaluated per batch.

    Returns:
        EstimatorOutput: The estimate on the finest partition and its cost.
    """
    return _multilevel(sampler, plan, seed, replicate, False, chunk_size)


def second_moment_slmc(
    sampler: LevelSampler,
    level: int,
    M: int,
    seed: ReplicateSeeder | int,
    replicate: int = 0,
    chunk_size: int = DEFAULT_CHUNK,
) -> EstimatorOutput:
    return _single_level(sampler, level, M, seed, replicate, True, chunk_size)


def second_moment_mlmc(
    sampler: LevelSampler,
    plan: AllocationPlan,
    seed: ReplicateSeeder | int,
    replicate: int = 0,
    chunk_size: int = DEFAULT_CHUNK,
) -> EstimatorOutput:
    """Multilevel estimate of E[X (x) X] from the differences X_l (x) X_l - X_(l-1) (x) X_(l-1)."""
    return _multilevel(sampler, plan, seed, replicate, True, chunk_size)


def replicate_error(
    make_estimate: Callable[[int], Any],
    exact: Any,
    norm: Callable[[Any, Any], float],
    K: int,
    q_outer: float = 2.0,
    workers: int = 1,
) -> ErrorMeasurement:
    """Errors norm(estimate_k, exact) over K replicates, in replicate order.

    `norm(estimate, exact)` returns the distance of the two arguments.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")

    def one(k: int) -> float:
        try:
            return float(norm(make_estimate(k), exact))
        except EstimationError as err:
            err.replicate = k
            raise
        except (EvaluationError, ArithmeticError, ValueError) as err:
            raise EstimationError(f"Replicate {k} failed: {err}", replicate=k) from err

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            errors = tuple(executor.map(one, range(K)))
    else:
        errors = tuple(one(k) for k in range(K))
    return ErrorMeasurement(errors, q_outer)


def fit_rate_loglog(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit y ~ C x^-rate on log-log axes, returns (C, rate)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be one-dimensional and of equal length")
    if xs.size < 2:
        raise ValueError(f"A rate fit needs at least 2 points, got {xs.size}")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("A log-log fit needs strictly positive data")
    slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(np.exp(intercept)), float(-slope)


def fit_bias_rate(dims: Sequence[float], biases: Sequence[float]) -> tuple[float, float]:
    """(C_alpha, alpha) with bias(N) ~ C_alpha N^-alpha."""
    C_alpha, alpha = fit_rate_loglog(dims, biases)
    logger.info(f"Fitted bias rate alpha={alpha:.3f}, C_alpha={C_alpha:.3e}")
    return C_alpha, alpha


def fit_strong_rates(
    dims: Sequence[float], strong_norms: Mapping[float, Sequence[float]]
) -> StrongRateFit:
    """Fit beta(r) per r, then beta(r) = b0 + b1 / r by least squares.

    `strong_norms[r]` holds ||X_l - X_(l-1)|| in L^r(Omega; E) for each entry of `dims`.
    """
    if len(strong_norms) < 2:
        raise ValueError("The affine strong rate needs at least two exponents r")
    betas = {}
    constants = []
    for r, norms in sorted(strong_norms.items()):
        C, beta = fit_rate_loglog(dims, norms)
        betas[float(r)] = beta
        constants.append(C)
    r_values = np.array(list(betas))
    design = np.column_stack((np.ones_like(r_values), 1.0 / r_values))
    (b0, b1), *_ = np.linalg.lstsq(design, np.array(list(betas.values())), rcond=None)
    logger.info(f"Fitted strong rate beta(r) = {b0:.3f} + {b1:.3f}/r")
    return StrongRateFit(float(b0), float(b1), float(max(constants)), betas)


def prefix_means(
    chunk_sum: Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]],
    params: npt.ArrayLike,
    sizes: Sequence[int],
    chunk_size: int = DEFAULT_CHUNK,
) -> list[npt.NDArray[np.float64]]:
    """Sample means over params[:M] for every M in `sizes`, in one pass over params.

    `chunk_sum(block)` returns the sum of the per-sample quantities of a block.
    """
    params = np.asarray(params)
    sizes = [int(m) for m in sizes]
    if not sizes or any(m < 1 for m in sizes) or sorted(sizes) != sizes:
        raise ValueError("sizes must be positive and non-decreasing")
    if sizes[-1] > params.shape[0]:
        raise ValueError(f"Only {params.shape[0]} parameters for a prefix of {sizes[-1]}")

    means = []
    total = None
    done = 0
    for target in sizes:
        while done < target:
            stop = min(done + chunk_size, target)
            part = np.asarray(chunk_sum(params[done:stop]), dtype=np.float64)
            total = part if total is None else total + part
            done = stop
        means.append(total / target)
    return means
