from __future__ import annotations

import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
import numpy.typing as npt
from loguru import logger

from banachmc.common_values import (
    BasisKind,
    ExperimentKind,
    MeshKind,
    PlanRegime,
    RecordLayout,
    Representation,
    Schedule,
)
from banachmc.exceptions import ConfigError, EstimationError, EvaluationError
from banachmc.modules.models import (
    BvpMeanDerivative,
    BvpModel,
    BvpSampler,
    FaModel,
    FaSampler,
    bvp_exact_mean,
    bvp_exact_mean_derivative,
    bvp_reference_second_moment,
    fa_exact_mean,
    fa_exact_mean_antiderivative,
    fa_exact_second_moment,
    fa_value,
)
from banachmc.modules.sampling import (
    EstimatorOutput,
    LevelSampler,
    ReplicateSeeder,
    fit_bias_rate,
    fit_rate_loglog,
    fit_strong_rates,
    mlmc_estimate,
    prefix_means,
    replicate_error,
    second_moment_mlmc,
    second_moment_slmc,
    slmc_estimate,
)
from banachmc.modules.spaces import (
    NodalTensorFn,
    Partition,
    PiecewiseConstantFn,
    PiecewiseLinearFn,
    QuadratureRule,
    SingularitySpec,
    cell_average_project,
    dyadic_level_map,
    graded_tensor_rule,
    lp_norm_quadrature,
    make_partition,
    midpoint_interpolate,
    nodal_interpolate,
    prolong_tensor,
    prolongation_matrix,
    restrict_nodal_tensor,
    tensor_interpolate,
)
from banachmc.modules.spaces.fn_base import geometric_breakpoints_fn
from banachmc.modules.systems import ExperimentConfig, RunRecord
from banachmc.modules.tensors import (
    assemble_dual,
    injective_norm_bruteforce,
    injective_norm_multistart,
)
from banachmc.modules.tensors.injective_norm import MAX_BRUTEFORCE_DIM
from banachmc.modules.theory import (
    AllocationPlan,
    PlanInputs,
    RateModel,
    SpaceSpec,
    choose_finest_level,
    conjugate,
    mlmc_plan_minkowski,
    predicted_cost_exponent,
    schedule_samples,
    slmc_constant_bundle,
    slmc_error_bound,
    slmc_plan,
)

T = TypeVar("T")

STREAM_REUSE_NOTE = "schedules share replicate streams"

LAYOUTS = {
    ExperimentKind.RATES_TABLE1: RecordLayout.RATES,
    ExperimentKind.RATES_TABLE2: RecordLayout.RATES,
    ExperimentKind.RATES_TABLE3: RecordLayout.RATES,
    ExperimentKind.RATES_TABLE4: RecordLayout.RATES,
    ExperimentKind.INJECTIVE_NORM: RecordLayout.NORM,
}


def tensor_power_integral(
    rule: QuadratureRule, values: npt.NDArray[np.float64], p: float
) -> float:
    """sum over the tensor rule of w_i w_j |values_ij|^p"""
    return float(np.sum(np.outer(rule.weights, rule.weights) * np.abs(values) ** p))


def cell_tensor_at(fn: NodalTensorFn, points: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Values of a cell tensor on the grid points x points."""
    partition = fn.partition
    cells = np.clip(
        np.searchsorted(partition.nodes, points, side="right") - 1, 0, partition.n_cells - 1
    )
    return fn.values[np.ix_(cells, cells)]


class Experiment:
    """Runs one configured experiment and collects its rows into a RunRecord."""

    def __init__(self, config: ExperimentConfig | None = None, **kwargs):
        if config is None:
            config = ExperimentConfig(**kwargs)

        self.config = config
        self.kind = config.experiment
        self.seeder = ReplicateSeeder(config.seed, config.experiment.value)
        self.record = self._new_record()
        self._rules: dict[Any, tuple[QuadratureRule, npt.NDArray[np.float64]]] = {}
        self._handlers: dict[ExperimentKind, Callable[[], None]] = {
            ExperimentKind.RATES_TABLE1: self._run_rates,
            ExperimentKind.RATES_TABLE2: self._run_rates,
            ExperimentKind.RATES_TABLE3: self._run_rates,
            ExperimentKind.RATES_TABLE4: self._run_rates,
            ExperimentKind.SLMC_BVP: self._run_slmc_bvp,
            ExperimentKind.SLMC_FA: self._run_slmc_fa,
            ExperimentKind.MLMC_FA: self._run_mlmc_fa,
            ExperimentKind.MOMENT2_BVP: self._run_moment2_bvp,
            ExperimentKind.MOMENT2_FA: self._run_moment2_fa,
            ExperimentKind.INJECTIVE_NORM: self._run_injective_norm,
        }

    def _new_record(self) -> RunRecord:
        record = RunRecord(
            self.kind.value,
            LAYOUTS.get(self.kind, RecordLayout.SWEEP),
            config=self.config.to_dict(),
            config_hash=self.config.config_hash(),
        )
        record.metadata.update(
            {
                "seed": str(self.config.seed),
                "seeder": repr(self.seeder),
                "paper_scale": "true" if self.config.paper_scale else "false",
                "stream_reuse": STREAM_REUSE_NOTE,
            }
        )
        return record

    def run(self) -> RunRecord:
        self.record = self._new_record()
        logger.info(f"Running {self.kind.value} (seed {self.config.seed}, K={self.config.replication.K})")
        self._handlers[self.kind]()
        logger.info(f"{self.kind.value} finished with {len(self.record.rows)} rows")
        if self.config.out:
            self.write(self.config.out)
        return self.record

    def write(self, out: str | Path) -> Path:
        path = self.record.write_csv(out)
        self.record.save(path.with_suffix(".msgpack"))
        logger.info(f"Wrote {path} and {path.with_suffix('.msgpack')}")
        return path

    # shared plumbing

    def _map_replicates(self, function: Callable[[int], T]) -> list[T]:
        def one(k: int) -> T:
            try:
                return function(k)
            except EstimationError as err:
                err.replicate = k
                raise
            except (EvaluationError, ArithmeticError, ValueError) as err:
                raise EstimationError(f"Replicate {k} failed: {err}", replicate=k) from err

        K = self.config.replication.K
        if self.config.threads > 1:
            with ThreadPoolExecutor(max_workers=self.config.threads) as executor:
                return list(executor.map(one, range(K)))
        return [one(k) for k in range(K)]

    def _elapsed(self, started: float, count: int = 1) -> float:
        if not self.config.record_timing:
            return 0.0
        return (time.perf_counter() - started) / count

    def _level_map(self, mesh: MeshKind | None = None):
        return dyadic_level_map(self.config.model.mesh if mesh is None else mesh)

    def _rate_model(
        self,
        bias: Callable[[int], float],
        level_map: Callable[[int], Partition],
        gamma: float,
        level_min: int = 1,
        **strong: float,
    ) -> RateModel:
        """Configured rates, with (C_alpha, alpha) fitted where asked for or missing."""
        rates = self.config.rates
        C_beta = strong.pop("C_beta", rates.C_beta)
        alpha, C_alpha = rates.alpha, rates.C_alpha
        if rates.fit or alpha is None or C_alpha is None:
            levels = self.config.schedule.fit_levels
            dims = [level_map(level).n_cells for level in levels]
            biases = [bias(level) for level in levels]
            C_fit, alpha_fit = fit_bias_rate(dims, biases)
            self.record.fits["bias"] = [C_fit, alpha_fit]
            if rates.fit or alpha is None:
                alpha = alpha_fit
            if rates.fit or C_alpha is None:
                C_alpha = C_fit
        return RateModel(
            alpha=alpha,
            C_alpha=C_alpha,
            gamma=gamma,
            C_gamma=rates.C_gamma,
            A=rates.A,
            C_beta=C_beta,
            C_stab=rates.C_stab,
            level_min=level_min,
            **strong,
        )

    def _add_sweep_row(
        self,
        eps: float,
        level: int,
        M: Sequence[int],
        error: float | None,
        bound: float,
        cost: float,
        seconds: float,
        r_used: float,
        label: str,
    ) -> None:
        self.record.add_row(
            eps=eps,
            level_L=level,
            M_list=tuple(M),
            err_measured=error,
            err_bound=bound,
            cost_units=cost,
            wall_seconds=seconds,
            r_used=r_used,
            case_label=label,
        )
        measured = "plan only" if error is None else f"error {error:.3e}"
        logger.info(f"[{label}] eps={eps:.3e}: L={level}, {measured}, cost {cost:.3e}")

    def _measure(
        self,
        make_estimate: Callable[[int], EstimatorOutput],
        norm: Callable[[Any, Any], float],
        exact: Any = None,
    ) -> tuple[float | None, float]:
        if self.config.schedule.plan_only:
            return None, 0.0
        started = time.perf_counter()
        measurement = replicate_error(
            make_estimate,
            exact,
            norm,
            self.config.replication.K,
            self.config.q_outer,
            self.config.threads,
        )
        return measurement.aggregated, self._elapsed(started, measurement.K)

    @staticmethod
    def _slmc_replicate(
        estimator: Callable, sampler: LevelSampler, level: int, M: int, seeder, chunk_size: int, k: int
    ) -> EstimatorOutput:
        return estimator(sampler, level, M, seeder, k, chunk_size)

    @staticmethod
    def _mlmc_replicate(
        estimator: Callable, sampler: LevelSampler, plan: AllocationPlan, seeder, chunk_size: int, k: int
    ) -> EstimatorOutput:
        return estimator(sampler, plan, seeder, k, chunk_size)

    # single-level sweeps

    def _slmc_schedule(
        self, schedule: Schedule, eps: float, rate: RateModel, spec: SpaceSpec
    ) -> tuple[int, int, float, float]:
        """(L, M, r, error bound) of one schedule at tolerance eps."""
        mode = self.config.rates.constant_mode
        plan = slmc_plan(eps, rate, spec, mode)
        if schedule == Schedule.DIM_DEP:
            return plan.L, plan.M[0], plan.r, plan.error_bound
        L = choose_finest_level(eps, rate, slmc_constant_bundle(rate, spec, mode))
        M = schedule_samples(schedule, eps, spec.p, rate.alpha, spec.q_hat)
        r_conj = {
            Schedule.HILBERT: 2.0,
            Schedule.TYPE_P: spec.p_conj,
            Schedule.DIM_DEP_EPS: plan.r_conj,
            Schedule.MINKOWSKI: conjugate(spec.q_hat),
        }[schedule]
        bound = slmc_error_bound(rate.n_of_level(L), M, rate, spec, r_conj, mode)
        return L, M, conjugate(r_conj), bound

    def _slmc_sweep(
        self,
        sampler: LevelSampler,
        rate: RateModel,
        spec: SpaceSpec,
        norm: Callable[[Any, Any], float],
        exact: Any = None,
        second: bool = False,
        max_level: int | None = None,
    ) -> None:
        estimator = second_moment_slmc if second else slmc_estimate
        chunk_size = self.config.replication.chunk_size
        for schedule in self.config.schedule.schedules:
            for eps in self.config.schedule.tolerances:
                L, M, r_used, bound = self._slmc_schedule(schedule, eps, rate, spec)
                if max_level is not None and L > max_level:
                    raise ConfigError(
                        f"eps={eps} needs level {L} beyond the reference level {max_level}",
                        "schedule.tolerances",
                    )
                make_estimate = partial(
                    self._slmc_replicate, estimator, sampler, L, M, self.seeder, chunk_size
                )
                error, seconds = self._measure(make_estimate, norm, exact)
                cost = rate.C_gamma * float(rate.n_of_level(L)) ** rate.gamma * M
                self._add_sweep_row(eps, L, (M,), error, bound, cost, seconds, r_used, schedule.value)

    # multilevel sweeps

    def _mlmc_sweep(
        self,
        sampler: LevelSampler,
        rate: RateModel,
        q: float,
        q_tilde: float,
        norm: Callable[[Any, Any], float],
        exact: Any = None,
        second: bool = False,
    ) -> None:
        estimator = second_moment_mlmc if second else mlmc_estimate
        chunk_size = self.config.replication.chunk_size
        mode = self.config.rates.constant_mode
        baseline = self.config.schedule.compare_fixed_r and q < 2.0

        exponent = predicted_cost_exponent(PlanInputs(PlanRegime.MINKOWSKI, rate, q=q, q_tilde=q_tilde))
        self.record.fits["predicted_cost_exponent"] = [exponent.exponent, exponent.log_power]
        if baseline:
            fixed = predicted_cost_exponent(
                PlanInputs(PlanRegime.MINKOWSKI, rate, q=q, q_tilde=q_tilde, r_conj=conjugate(q))
            )
            self.record.fits["fixed_r_cost_exponent"] = [fixed.exponent, fixed.log_power]
        self.record.metadata["cost_case"] = exponent.case.value

        for eps in self.config.schedule.tolerances:
            plans = [mlmc_plan_minkowski(eps, rate, q, q_tilde, mode)]
            if baseline:
                plans.append(mlmc_plan_minkowski(eps, rate, q, q_tilde, mode, r_conj=conjugate(q)))
            for plan in plans:
                make_estimate = partial(
                    self._mlmc_replicate, estimator, sampler, plan, self.seeder, chunk_size
                )
                error, seconds = self._measure(make_estimate, norm, exact)
                self._add_sweep_row(
                    eps,
                    plan.L,
                    plan.M,
                    error,
                    plan.error_bound,
                    plan.predicted_cost,
                    seconds,
                    plan.r,
                    plan.cost_case.value,
                )

    def _strong_rates(
        self, sampler: LevelSampler, p: float, second: bool, b0: float, b1: float
    ) -> dict[str, float]:
        """Affine strong rate: configured, model default, or fitted from coupled samples."""
        rates = self.config.rates
        if not rates.fit:
            return {
                "b0": b0 if rates.b0 is None else rates.b0,
                "b1": b1 if rates.b1 is None else rates.b1,
                "C_beta": rates.C_beta,
            }
        levels = [level for level in self.config.schedule.fit_levels if level > sampler.level_min]
        if len(levels) < 2:
            raise ConfigError(
                f"strong-rate fits need two levels above {sampler.level_min}", "schedule.fit_levels"
            )
        seeder = ReplicateSeeder(self.config.seed, f"{self.kind.value}-strong")
        exponents = rates.strong_exponents
        strong_norms: dict[float, list[float]] = {r: [] for r in exponents}
        dims = []
        for level in levels:
            fine_partition = sampler.level_space(level)
            coarse_partition = sampler.level_space(level - 1)
            rng = seeder.generator(0, level)
            fine, coarse = sampler.coupled_batch(level, rng, rates.strong_samples)
            matrix = prolongation_matrix(coarse_partition, fine_partition, sampler.basis_kind)
            coarse = (matrix @ coarse.T).T
            widths = fine_partition.widths
            if second:
                cell_weights = np.outer(widths, widths)
                norms = np.array(
                    [
                        np.sum(cell_weights * np.abs(np.outer(f, f) - np.outer(c, c)) ** p)
                        ** (1.0 / p)
                        for f, c in zip(fine, coarse)
                    ]
                )
            else:
                norms = np.sum(widths * np.abs(fine - coarse) ** p, axis=1) ** (1.0 / p)
            for r in exponents:
                strong_norms[r].append(float(np.mean(norms**r) ** (1.0 / r)))
            dims.append(fine_partition.n_cells)
        fit = fit_strong_rates(dims, strong_norms)
        self.record.fits["strong"] = [fit.b0, fit.b1, fit.C_beta]
        return {"b0": fit.b0, "b1": fit.b1, "C_beta": fit.C_beta}

    # rate tables

    def _run_rates(self) -> None:
        sizes = [int(m) for m in self.config.schedule.sample_sizes]
        for p, q in self.config.model.pairs:
            if self.kind == ExperimentKind.RATES_TABLE1:
                model = BvpModel(p, self.config.model.eta)
                errors, theory, q_outer = self._bvp_rate_errors(model, sizes), model.theory_rate, 2.0
            elif self.kind == ExperimentKind.RATES_TABLE4:
                model = FaModel(p, q, self.config.model.eta, self.config.model.eta_rule)
                model.check_second_moment()
                errors, q_outer = self._fa_second_rate_errors(model, sizes), q
                theory = 1.0 - 1.0 / model.second_moment_q_hat
            else:
                model = FaModel(p, q, self.config.model.eta, self.config.model.eta_rule)
                errors, theory, q_outer = self._fa_rate_errors(model, sizes), model.theory_rate, q
            if self.config.replication.q_outer is not None:
                q_outer = self.config.replication.q_outer

            per_replicate = np.array(self._map_replicates(errors))
            aggregated = np.mean(per_replicate**q_outer, axis=0) ** (1.0 / q_outer)
            C, rate = fit_rate_loglog(sizes, aggregated)
            self.record.fits[f"p={p:g},q={q:g}"] = [C, rate]
            for M, error in zip(sizes, aggregated):
                self.record.add_row(
                    param_p=p, param_q=q, M=M, err=error, fitted_rate=rate, theory_rate=theory
                )
            logger.info(f"p={p:g}, q={q:g}: fitted rate {rate:.3f} (theory {theory:.3f})")

    def _bvp_mean_error(self, model: BvpModel, ys: npt.NDArray[np.float64]) -> float:
        quadrature = self.config.quadrature
        average = BvpMeanDerivative(ys, model.eta)

        def difference(x):
            return bvp_exact_mean_derivative(x, model.eta) - average(x)

        return lp_norm_quadrature(
            difference,
            model.p,
            average.singularity,
            quadrature.cells_per_piece,
            quadrature.nodes_per_cell,
            quadrature.max_doublings,
        )

    def _bvp_rate_errors(self, model: BvpModel, sizes: list[int]) -> Callable[[int], list[float]]:
        def errors(k: int) -> list[float]:
            ys = self.seeder.generator(k, 0).random(sizes[-1])
            return [self._bvp_mean_error(model, ys[:M]) for M in sizes]

        return errors

    def _fa_rate_errors(self, model: FaModel, sizes: list[int]) -> Callable[[int], list[float]]:
        rule, exact = self._fa_rule(model, None)
        chunk_size = self.config.replication.chunk_size

        def chunk_sum(block):
            return fa_value(rule.points[None, :], block[:, None], model.eta).sum(axis=0)

        def errors(k: int) -> list[float]:
            ys = self.seeder.generator(k, 0).random(sizes[-1])
            means = prefix_means(chunk_sum, ys, sizes, chunk_size)
            return [rule.integrate_power(exact - mean, model.p) ** (1.0 / model.p) for mean in means]

        return errors

    def _fa_second_rate_errors(
        self, model: FaModel, sizes: list[int]
    ) -> Callable[[int], list[float]]:
        quadrature = self.config.quadrature
        rule = graded_tensor_rule(
            quadrature.tensor_cells, quadrature.tensor_nodes, quadrature.skip_axis_cells
        )
        x, x_prime = np.meshgrid(rule.points, rule.points, indexing="ij")
        exact = fa_exact_second_moment(x, x_prime)
        chunk_size = min(self.config.replication.chunk_size, 512)

        def chunk_sum(block):
            values = fa_value(rule.points[None, :], block[:, None], model.eta)
            return values.T @ values

        def errors(k: int) -> list[float]:
            ys = self.seeder.generator(k, 0).random(sizes[-1])
            means = prefix_means(chunk_sum, ys, sizes, chunk_size)
            return [
                tensor_power_integral(rule, exact - mean, model.p) ** (1.0 / model.p)
                for mean in means
            ]

        return errors

    # boundary value problem

    def _bvp_model(self) -> BvpModel:
        return BvpModel(self.config.model.p, self.config.model.eta)

    def _w1p_error(self, model: BvpModel, estimate: PiecewiseLinearFn) -> float:
        """||E[u]' - v'||_{L^p}, with panels cut at the mesh nodes of v."""
        quadrature = self.config.quadrature
        slopes = estimate.derivative()

        def difference(x):
            return bvp_exact_mean_derivative(x, model.eta) - slopes(x)

        return lp_norm_quadrature(
            difference,
            model.p,
            SingularitySpec(estimate.partition.nodes, 0.0),
            1,
            quadrature.nodes_per_cell,
            0,
        )

    def _run_slmc_bvp(self) -> None:
        model = self._bvp_model()
        level_map = self._level_map(MeshKind.UNIFORM)
        sampler = BvpSampler(model, level_map, self.config.schedule.level_min)

        def bias(level: int) -> float:
            interpolant = nodal_interpolate(partial(bvp_exact_mean, eta=model.eta), level_map(level))
            return self._w1p_error(model, interpolant)

        def norm(output: EstimatorOutput, _exact) -> float:
            return self._w1p_error(model, output.estimate)

        rate = self._rate_model(bias, level_map, self.config.rates.gamma, sampler.level_min)
        self._slmc_sweep(sampler, rate, model.space_spec(2.0), norm)

    def _run_moment2_bvp(self) -> None:
        model = self._bvp_model()
        quadrature = self.config.quadrature
        injective = self.config.injective
        reference_level = quadrature.reference_level
        if any(level >= reference_level for level in self.config.schedule.fit_levels):
            raise ConfigError(
                f"fit levels must lie below the reference level {reference_level}",
                "schedule.fit_levels",
            )
        reference_partition = make_partition(2**reference_level, MeshKind.UNIFORM)
        logger.info(f"Assembling the reference second moment on {reference_partition}")
        reference = bvp_reference_second_moment(
            reference_partition, model.eta, quadrature.epsabs, quadrature.epsrel
        )
        dual = assemble_dual(reference_partition, model.p, injective.dual_basis)
        level_map = self._level_map(MeshKind.UNIFORM)
        sampler = BvpSampler(model, level_map, self.config.schedule.level_min)

        def injective_distance(fn: NodalTensorFn) -> float:
            difference = reference - prolong_tensor(fn, reference_partition)
            return injective_norm_multistart(
                difference.values, dual, injective.restarts, injective.max_it, injective.tol
            ).value

        def bias(level: int) -> float:
            return injective_distance(restrict_nodal_tensor(reference, level_map(level)))

        def norm(output: EstimatorOutput, _exact) -> float:
            return injective_distance(output.estimate)

        rate = self._rate_model(bias, level_map, self.config.rates.gamma, sampler.level_min)
        self._slmc_sweep(
            sampler, rate, model.space_spec(2.0), norm, second=True, max_level=reference_level
        )

    # function approximation

    def _fa_model(self) -> FaModel:
        model_config = self.config.model
        return FaModel(model_config.p, model_config.q, model_config.eta, model_config.eta_rule)

    def _fa_rule(
        self, model: FaModel, partition: Partition | None
    ) -> tuple[QuadratureRule, npt.NDArray[np.float64]]:
        """Geometric rule towards x = 0, refined by the mesh nodes, with E[u] on its points."""
        key = (model.eta, model.p, partition)
        if key not in self._rules:
            quadrature = self.config.quadrature
            breakpoints = geometric_breakpoints_fn(quadrature.geometric_depth)
            if partition is not None:
                breakpoints = np.union1d(breakpoints, partition.nodes)
            kappa = SingularitySpec(np.zeros(1), max(model.eta - 1.0, 0.0)).weight_exponent(model.p)
            rule = QuadratureRule.composite(breakpoints, quadrature.nodes_per_cell, (0.0,), kappa)
            self._rules[key] = (rule, fa_exact_mean(rule.points, model.eta))
        return self._rules[key]

    def _fa_error(self, model: FaModel, estimate: PiecewiseConstantFn) -> float:
        rule, exact = self._fa_rule(model, estimate.partition)
        return rule.integrate_power(exact - estimate(rule.points), model.p) ** (1.0 / model.p)

    def _fa_interpolant(self, model: FaModel, partition: Partition) -> PiecewiseConstantFn:
        if self.config.model.representation == Representation.CELL_AVERAGE:
            return cell_average_project(
                partial(fa_exact_mean_antiderivative, eta=model.eta), partition
            )
        return midpoint_interpolate(partial(fa_exact_mean, eta=model.eta), partition)

    def _fa_sampler(self, model: FaModel, level_map, gamma: float = 1.0) -> FaSampler:
        return FaSampler(
            model,
            level_map,
            self.config.schedule.level_min,
            gamma,
            self.config.model.representation,
        )

    def _run_slmc_fa(self) -> None:
        model = self._fa_model()
        level_map = self._level_map()
        sampler = self._fa_sampler(model, level_map, self.config.rates.gamma)

        def bias(level: int) -> float:
            return self._fa_error(model, self._fa_interpolant(model, level_map(level)))

        def norm(output: EstimatorOutput, _exact) -> float:
            return self._fa_error(model, output.estimate)

        rate = self._rate_model(bias, level_map, self.config.rates.gamma, sampler.level_min)
        self._slmc_sweep(sampler, rate, model.space_spec(), norm)

    def _run_mlmc_fa(self) -> None:
        model = self._fa_model()
        level_map = self._level_map()
        gamma = self.config.rates.gamma
        sampler = self._fa_sampler(model, level_map, gamma)

        def bias(level: int) -> float:
            return self._fa_error(model, self._fa_interpolant(model, level_map(level)))

        def norm(output: EstimatorOutput, _exact) -> float:
            return self._fa_error(model, output.estimate)

        strong = self._strong_rates(sampler, model.p, False, model.b0, model.b1)
        rate = self._rate_model(bias, level_map, gamma, sampler.level_min, **strong)
        self._mlmc_sweep(sampler, rate, model.q, model.q_hat, norm)

    def _tensor_rule(
        self, partition: Partition
    ) -> tuple[QuadratureRule, npt.NDArray[np.float64]]:
        """Tensor Gauss rule on the cells of `partition` with E[u (x) u] on its grid."""
        key = ("tensor", partition)
        if key not in self._rules:
            quadrature = self.config.quadrature
            breakpoints = partition.nodes[1:] if quadrature.skip_axis_cells else partition.nodes
            rule = QuadratureRule.composite(breakpoints, quadrature.tensor_nodes)
            x, x_prime = np.meshgrid(rule.points, rule.points, indexing="ij")
            self._rules[key] = (rule, fa_exact_second_moment(x, x_prime))
        return self._rules[key]

    def _fa_second_error(self, model: FaModel, estimate: NodalTensorFn) -> float:
        rule, exact = self._tensor_rule(estimate.partition)
        values = cell_tensor_at(estimate, rule.points)
        return tensor_power_integral(rule, exact - values, model.p) ** (1.0 / model.p)

    def _run_moment2_fa(self) -> None:
        model = self._fa_model()
        model.check_second_moment()
        level_map = self._level_map()
        gamma = self.config.rates.gamma
        sampler = self._fa_sampler(model, level_map, gamma)

        def bias(level: int) -> float:
            interpolant = tensor_interpolate(fa_exact_second_moment, level_map(level), BasisKind.CELL)
            return self._fa_second_error(model, interpolant)

        def norm(output: EstimatorOutput, _exact) -> float:
            return self._fa_second_error(model, output.estimate)

        strong = self._strong_rates(sampler, model.p, True, 0.17, 1.0)
        rate = self._rate_model(bias, level_map, gamma, sampler.level_min, **strong)
        self._mlmc_sweep(sampler, rate, model.q, model.second_moment_q_hat, norm, second=True)

    # injective norm

    def _run_injective_norm(self) -> None:
        injective = self.config.injective
        p = self.config.model.p
        rng = self.seeder.generator(0, 0)
        instance = 0
        for n_cells in injective.dims:
            partition = make_partition(n_cells, MeshKind.UNIFORM)
            dual = assemble_dual(partition, p, injective.dual_basis)
            for _ in range(injective.instances):
                U = np.zeros((n_cells + 1, n_cells + 1))
                U[1:, 1:] = rng.standard_normal((n_cells, n_cells))
                result = injective_norm_multistart(
                    U,
                    dual,
                    injective.restarts,
                    injective.max_it,
                    injective.tol,
                    seed=instance,
                    workers=self.config.threads,
                )
                brute = None
                if injective.bruteforce and dual.dual_dim <= MAX_BRUTEFORCE_DIM:
                    brute = injective_norm_bruteforce(U, dual, seed=instance)
                self.record.add_row(
                    instance=instance,
                    value=result.value,
                    iterations=result.iterations,
                    converged=result.converged,
                    restarts_used=result.restarts_used,
                    bruteforce_value=brute,
                )
                logger.debug(f"Instance {instance} ({n_cells} cells): {result.value:.6e}")
                instance += 1
