from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from loguru import logger

from banachmc.common_values import (
    CASE_RTOL,
    BetaKind,
    ConstantMode,
    CostCase,
    PlanRegime,
    Regime,
    Schedule,
)
from banachmc.exceptions import UnsupportedRegimeError
from banachmc.modules.spaces.fn_base import ceil_count_fn, conjugate_fn
from banachmc.modules.theory.rademacher import SpaceSpec, kahane_K_q1, khintchine_B

MAX_LEVELS = 1000

FAST_BIAS_CASES = (
    CostCase.SUBCRITICAL,
    CostCase.CRITICAL,
    CostCase.INTERIOR_FAST_BIAS,
    CostCase.BEYOND_FAST_BIAS,
)


def ceil_count(x: float) -> int:
    return ceil_count_fn(x)


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=CASE_RTOL, abs_tol=1e-12)


@dataclass(frozen=True)
class RateModel:
    """Bias (alpha), strong-error (beta) and cost (gamma) rates in the dimension N_l.

    Give either a constant `beta` or the affine law beta(r) = b0 + b1 / r.
    """

    alpha: float
    C_alpha: float = 1.0
    gamma: float = 1.0
    C_gamma: float = 1.0
    A: float = 2.0
    beta: float | None = None
    b0: float | None = None
    b1: float | None = None
    C_beta: float = 1.0
    C_stab: float = 1.0
    level_min: int = 1
    level_offset: int = 0

    def __post_init__(self):
        if self.alpha <= 0 or self.C_alpha <= 0:
            raise ValueError("alpha and C_alpha must be positive")
        if self.gamma <= 0 or self.C_gamma <= 0:
            raise ValueError("gamma and C_gamma must be positive")
        if self.A <= 1:
            raise ValueError(f"Dimension growth A must exceed 1, got {self.A}")
        if self.level_min < 1:
            raise ValueError(f"level_min must be >= 1, got {self.level_min}")
        if self.beta is not None:
            if self.b0 is not None or self.b1 is not None:
                raise ValueError("Give either beta or (b0, b1), not both")
            if self.beta <= 0:
                raise ValueError(f"beta must be positive, got {self.beta}")
        elif self.b0 is not None and self.b1 is not None:
            if self.b1 <= 0:
                raise ValueError(f"b1 must be positive, got {self.b1}")
        elif self.b0 is not None or self.b1 is not None:
            raise ValueError("The affine rate needs both b0 and b1")

    @property
    def beta_kind(self) -> BetaKind | None:
        if self.beta is not None:
            return BetaKind.CONSTANT
        if self.b0 is not None:
            return BetaKind.AFFINE_IN_INV_R
        return None

    def beta_at(self, r: float) -> float:
        if self.beta is not None:
            return self.beta
        if self.b0 is None:
            raise ValueError("RateModel has no strong rate")
        value = self.b0 + self.b1 / r
        if value <= 0:
            raise ValueError(f"beta({r}) = {value} is not positive")
        return value

    def n_of_level(self, level: int) -> int:
        x = self.A ** (level + self.level_offset)
        nearest = round(x)
        if math.isclose(x, nearest, rel_tol=1e-12):
            return int(nearest)
        return math.ceil(x)

    def levels(self, L: int) -> tuple[int, ...]:
        return tuple(range(self.level_min, L + 1))

    def dims(self, L: int) -> np.ndarray:
        return np.array([float(self.n_of_level(level)) for level in self.levels(L)])


@dataclass(frozen=True)
class AllocationPlan:
    regime: Regime
    r: float
    r_conj: float
    L: int
    M: tuple[int, ...]
    predicted_cost: float
    cost_case: CostCase
    levels: tuple[int, ...] = ()
    N: tuple[int, ...] = ()
    eps: float = 0.5
    error_bound: float = 0.0
    constant_mode: ConstantMode = ConstantMode.FULL
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"Finest level must be >= 1, got {self.L}")
        if not self.M or any(m < 1 for m in self.M):
            raise ValueError("Every level needs at least one sample")
        if not self.levels:
            object.__setattr__(self, "levels", (self.L,))
        if len(self.levels) != len(self.M):
            raise ValueError("Plan has one sample count per level")

    def to_record(self) -> dict[str, str]:
        return {
            "regime": self.regime.value,
            "r": repr(self.r),
            "L": str(self.L),
            "M_list": ";".join(str(m) for m in self.M),
            "predicted_cost": repr(self.predicted_cost),
            "case_label": self.cost_case.value,
        }

    def __str__(self) -> str:
        record = self.to_record()
        return " ".join(f"{key}={value}" for key, value in record.items())


class CostExponent(NamedTuple):
    exponent: float
    log_power: float
    case: CostCase


@dataclass(frozen=True)
class PlanInputs:
    """Inputs of a cost-exponent prediction for one of the three planners."""

    regime: PlanRegime
    rate: RateModel
    spec: SpaceSpec | None = None
    q: float | None = None
    q_tilde: float | None = None
    r_conj: float | None = None


def _check_eps(eps: float) -> None:
    if not 0.0 < eps <= 0.5:
        raise ValueError(f"Tolerance eps must lie in (0, 1/2], got {eps}")


def choose_finest_level(eps: float, rate: RateModel, constant_bundle: float) -> int:
    """Smallest level L >= level_min with N_L^-alpha * constant_bundle < eps."""
    _check_eps(eps)
    if constant_bundle <= 0:
        raise ValueError(f"constant_bundle must be positive, got {constant_bundle}")
    for level in range(rate.level_min, rate.level_min + MAX_LEVELS):
        if float(rate.n_of_level(level)) ** -rate.alpha * constant_bundle < eps:
            return level
    raise ValueError(f"No level below {rate.level_min + MAX_LEVELS} reaches eps={eps}")


def _slmc_r_conj(alpha: float, spec: SpaceSpec) -> tuple[float, CostCase]:
    if alpha >= spec.a1:
        return spec.q_bar_conj, CostCase.SLMC_Q_BAR
    if spec.p == 1.0:
        raise UnsupportedRegimeError(
            f"alpha={alpha} < a1={spec.a1} needs a space of type p > 1"
        )
    return spec.p_conj, CostCase.SLMC_P


def slmc_samples(N: int, alpha: float, spec: SpaceSpec) -> int:
    r_conj, _ = _slmc_r_conj(alpha, spec)
    return ceil_count_fn(float(N) ** (spec.a0 + r_conj * (alpha - spec.a1)))


def slmc_constant_bundle(
    rate: RateModel, spec: SpaceSpec, mode: ConstantMode = ConstantMode.FULL
) -> float:
    if mode == ConstantMode.RATES_ONLY:
        return rate.C_alpha
    return rate.C_alpha + 2.0 * kahane_K_q1(spec.q) * rate.C_stab * math.sqrt(spec.C_tau)


def slmc_error_bound(
    N: int, M: int, rate: RateModel, spec: SpaceSpec, r_conj: float, mode: ConstantMode
) -> float:
    statistical = 1.0
    if mode == ConstantMode.FULL:
        statistical = 2.0 * kahane_K_q1(spec.q) * rate.C_stab * spec.C_tau ** (1.0 / r_conj)
    N = float(N)
    return rate.C_alpha * N**-rate.alpha + statistical * N ** (
        spec.a0 / r_conj - spec.a1
    ) * float(M) ** (-1.0 / r_conj)


def slmc_plan(
    eps: float,
    rate: RateModel,
    spec: SpaceSpec,
    mode: ConstantMode = ConstantMode.FULL,
) -> AllocationPlan:
    bundle = slmc_constant_bundle(rate, spec, mode)
    L = choose_finest_level(eps, rate, bundle)
    N = rate.n_of_level(L)
    r_conj, case = _slmc_r_conj(rate.alpha, spec)
    M = slmc_samples(N, rate.alpha, spec)
    return AllocationPlan(
        regime=Regime.SLMC,
        r=conjugate_fn(r_conj),
        r_conj=r_conj,
        L=L,
        M=(M,),
        predicted_cost=rate.C_gamma * float(N) ** rate.gamma * M,
        cost_case=case,
        levels=(L,),
        N=(N,),
        eps=eps,
        error_bound=slmc_error_bound(N, M, rate, spec, r_conj, mode),
        constant_mode=mode,
    )


def schedule_samples(
    schedule: Schedule | str, eps: float, p: float, alpha: float = 1.0, q_hat: float = 2.0
) -> int:
    """Single-level sample count of an eps-driven schedule.

    `dim_dep` depends on the level dimension and is served by `slmc_samples`.
    """
    _check_eps(eps)
    schedule = Schedule(schedule)
    if schedule == Schedule.HILBERT:
        exponent = 2.0
    elif schedule == Schedule.TYPE_P:
        exponent = conjugate_fn(p)
    elif schedule == Schedule.DIM_DEP_EPS:
        p_conj = conjugate_fn(p)
        exponent = 2.0 + (p_conj - 2.0) / (p_conj * alpha)
    elif schedule == Schedule.MINKOWSKI:
        exponent = conjugate_fn(min(q_hat, 2.0))
    else:
        raise ValueError(f"{schedule.value} needs the level dimension, use slmc_samples")
    if math.isinf(exponent):
        raise UnsupportedRegimeError(f"{schedule.value} is undefined for p = 1")
    return ceil_count_fn(eps**-exponent)


def mlmc_case(t: float, r_min_conj: float, r_max_conj: float, alpha: float, rate_sum: float) -> CostCase:
    """The branch of the r' table selected by t and the bias/strong-rate balance."""
    if _close(t, r_min_conj):
        return CostCase.CRITICAL
    if t < r_min_conj:
        return CostCase.SUBCRITICAL
    fast_bias = alpha > rate_sum or _close(alpha, rate_sum)
    if t < r_max_conj or _close(t, r_max_conj):
        return CostCase.INTERIOR_FAST_BIAS if fast_bias else CostCase.INTERIOR_BALANCED
    return CostCase.BEYOND_FAST_BIAS if fast_bias else CostCase.BEYOND_SLOW_BIAS


def r_conj_for_case(case: CostCase, t: float, r_min_conj: float, r_max_conj: float) -> float:
    if case in FAST_BIAS_CASES:
        return r_min_conj
    if case == CostCase.INTERIOR_BALANCED:
        return t
    if case == CostCase.BEYOND_SLOW_BIAS:
        if math.isinf(r_max_conj):
            raise UnsupportedRegimeError("The slow-bias branch needs a finite r_max'")
        return r_max_conj
    raise ValueError(f"{case} is not a branch of the r' table")


def choose_r_dim_dep(
    p: float, q_bar: float, t: float, alpha: float, beta_plus_a1: float
) -> float:
    r_min_conj, r_max_conj = conjugate_fn(q_bar), conjugate_fn(p)
    if r_min_conj > r_max_conj:
        raise ValueError(f"Need q_bar' <= p', got q_bar={q_bar}, p={p}")
    case = mlmc_case(t, r_min_conj, r_max_conj, alpha, beta_plus_a1)
    return r_conj_for_case(case, t, r_min_conj, r_max_conj)


def choose_r_minkowski(
    q: float, q_hat: float, t: float, alpha: float, b0_plus_b1: float
) -> float:
    if not 1.0 < q < 2.0:
        raise ValueError(f"The r' optimization needs q in (1, 2), got {q}")
    r_min_conj, r_max_conj = conjugate_fn(q_hat), conjugate_fn(q)
    if r_min_conj > r_max_conj:
        raise ValueError(f"Need q_hat' <= q', got q_hat={q_hat}, q={q}")
    case = mlmc_case(t, r_min_conj, r_max_conj, alpha, b0_plus_b1)
    return r_conj_for_case(case, t, r_min_conj, r_max_conj)


def level_sum(rate: RateModel, L: int, exponent: float) -> float:
    """S = sum over levels of N_l^exponent."""
    return float(np.sum(rate.dims(L) ** exponent))


def level_sum_asymptote(rate: RateModel, L: int, exponent: float) -> float:
    if _close(exponent, 0.0):
        return float(L - rate.level_min + 1)
    if exponent < 0:
        return 1.0
    return float(rate.n_of_level(L)) ** exponent


def fixed_r_cost_exponent(
    alpha: float, gamma: float, r_conj: float, level_numerator: float
) -> tuple[float, float]:
    """eps-exponent and |log eps| power of the multilevel cost for a given r'.

    `level_numerator` is (r' + 1) times the exponent of the level sum S.
    """
    if _close(level_numerator, 0.0):
        multilevel, log_power = r_conj, r_conj + 1.0
    elif level_numerator < 0:
        multilevel, log_power = r_conj, 0.0
    else:
        multilevel, log_power = r_conj + level_numerator / alpha, 0.0
    single = gamma / alpha
    if single > multilevel and not _close(single, multilevel):
        return single, 0.0
    return multilevel, log_power


def _assemble_mlmc_plan(
    eps: float,
    rate: RateModel,
    r_conj: float,
    case: CostCase,
    shift: float,
    rate_sum: float,
    bundle: float,
    statistical: float,
    mode: ConstantMode,
) -> AllocationPlan:
    L = choose_finest_level(eps, rate, bundle)
    dims = rate.dims(L)
    numerator = rate.gamma + shift - rate_sum * r_conj
    s_sum = float(np.sum(dims ** (numerator / (r_conj + 1.0))))
    level_exponent = -((rate_sum + rate.gamma) * r_conj - shift) / (r_conj + 1.0)
    n_finest = dims[-1]
    M = tuple(
        ceil_count_fn(n_finest ** (rate.alpha * r_conj) * s_sum**r_conj * n**level_exponent)
        for n in dims
    )
    M_float = np.array([float(m) for m in M])
    predicted_cost = float(np.sum(rate.C_gamma * dims**rate.gamma * M_float))
    error_bound = rate.C_alpha * n_finest**-rate.alpha + statistical * float(
        np.sum(M_float ** (-1.0 / r_conj) * dims ** (shift / r_conj - rate_sum))
    )
    plan = AllocationPlan(
        regime=Regime.MLMC,
        r=conjugate_fn(r_conj),
        r_conj=r_conj,
        L=L,
        M=M,
        predicted_cost=predicted_cost,
        cost_case=case,
        levels=rate.levels(L),
        N=tuple(rate.n_of_level(level) for level in rate.levels(L)),
        eps=eps,
        error_bound=error_bound,
        constant_mode=mode,
        extras={"level_sum": s_sum},
    )
    logger.debug(f"MLMC plan eps={eps:.3e}: {plan}")
    return plan


def _check_fixed_r(r_conj: float, r_min_conj: float, r_max_conj: float) -> None:
    if r_conj < r_min_conj * (1 - CASE_RTOL) or r_conj > r_max_conj * (1 + CASE_RTOL):
        raise ValueError(f"r'={r_conj} lies outside [{r_min_conj}, {r_max_conj}]")


def mlmc_plan_dim_dep(
    eps: float,
    rate: RateModel,
    spec: SpaceSpec,
    mode: ConstantMode = ConstantMode.FULL,
    r_conj: float | None = None,
) -> AllocationPlan:
    """Multilevel plan from dimension-dependent type constants.

    Passing `r_conj` skips the r' optimization and labels the plan `fixed_r`.
    """
    _check_eps(eps)
    if rate.beta_kind != BetaKind.CONSTANT:
        raise ValueError("The dimension-dependent planner needs a constant beta")
    rate_sum = rate.beta + spec.a1
    t = (rate.gamma + spec.a0) / rate_sum
    r_min_conj, r_max_conj = spec.q_bar_conj, spec.p_conj
    if r_conj is None:
        case = mlmc_case(t, r_min_conj, r_max_conj, rate.alpha, rate_sum)
        r_conj = r_conj_for_case(case, t, r_min_conj, r_max_conj)
    else:
        _check_fixed_r(r_conj, r_min_conj, r_max_conj)
        case = CostCase.FIXED_R

    k_q1 = kahane_K_q1(spec.q)
    if mode == ConstantMode.FULL:
        bundle = rate.C_alpha + 2.0 * k_q1 * rate.C_beta * math.sqrt(spec.C_tau)
        statistical = 2.0 * k_q1 * rate.C_beta * spec.C_tau ** (1.0 / r_conj)
    else:
        bundle, statistical = rate.C_alpha, 1.0
    return _assemble_mlmc_plan(
        eps, rate, r_conj, case, spec.a0, rate_sum, bundle, statistical, mode
    )


def _hilbert_case(numerator: float) -> CostCase:
    if _close(numerator, 0.0):
        return CostCase.HILBERT_CRITICAL
    if numerator < 0:
        return CostCase.HILBERT_VARIANCE
    return CostCase.HILBERT_COST


def mlmc_plan_minkowski(
    eps: float,
    rate: RateModel,
    q: float,
    q_tilde: float | None = None,
    mode: ConstantMode = ConstantMode.FULL,
    r_conj: float | None = None,
) -> AllocationPlan:
    """Multilevel plan for L^p-valued samples with L^q(Omega) integrability.

    For q >= 2 the exponent is r = 2; below 2 the strong rate beta(r) = b0 + b1/r
    is traded against the sample count through r'.
    """
    _check_eps(eps)
    if not q > 1.0:
        raise ValueError(f"Integrability q must exceed 1, got {q}")
    q_tilde = q if q_tilde is None else q_tilde
    if q_tilde < q:
        raise ValueError(f"q_tilde={q_tilde} must be at least q={q}")

    if q >= 2.0:
        beta = rate.beta_at(2.0)
        r_conj = 2.0
        shift, rate_sum = 0.0, beta
        case = _hilbert_case(rate.gamma - 2.0 * beta)
        constant = khintchine_B(q) * rate.C_beta
    else:
        shift, rate_sum = _affine_parts(rate)
        t = (rate.gamma + shift) / rate_sum
        r_min_conj, r_max_conj = conjugate_fn(min(q_tilde, 2.0)), conjugate_fn(q)
        if r_conj is None:
            case = mlmc_case(t, r_min_conj, r_max_conj, rate.alpha, rate_sum)
            r_conj = r_conj_for_case(case, t, r_min_conj, r_max_conj)
        else:
            _check_fixed_r(r_conj, r_min_conj, r_max_conj)
            case = CostCase.FIXED_R
        rate.beta_at(conjugate_fn(r_conj))
        constant = rate.C_beta

    if mode == ConstantMode.FULL:
        bundle, statistical = rate.C_alpha + 2.0 * constant, 2.0 * constant
    else:
        bundle, statistical = rate.C_alpha, 1.0
    return _assemble_mlmc_plan(
        eps, rate, r_conj, case, shift, rate_sum, bundle, statistical, mode
    )


def _affine_parts(rate: RateModel) -> tuple[float, float]:
    """(b1, b0 + b1), the Minkowski counterparts of (a0, beta + a1)."""
    if rate.beta_kind == BetaKind.CONSTANT:
        return 0.0, rate.beta
    return rate.b1, rate.b0 + rate.b1


def predicted_cost_exponent(plan_inputs: PlanInputs) -> CostExponent:
    rate = plan_inputs.rate
    alpha, gamma = rate.alpha, rate.gamma

    if plan_inputs.regime == PlanRegime.SLMC:
        spec = _require_spec(plan_inputs)
        r_conj, case = _slmc_r_conj(alpha, spec)
        exponent = r_conj + (gamma + spec.a0 - spec.a1 * r_conj) / alpha
        return CostExponent(max(gamma / alpha, exponent), 0.0, case)

    if plan_inputs.regime == PlanRegime.DIM_DEP:
        spec = _require_spec(plan_inputs)
        shift, rate_sum = spec.a0, rate.beta_at(2.0) + spec.a1
        r_min_conj, r_max_conj = spec.q_bar_conj, spec.p_conj
    else:
        if plan_inputs.q is None:
            raise ValueError("The Minkowski prediction needs q")
        q = plan_inputs.q
        if q >= 2.0:
            numerator = gamma - 2.0 * rate.beta_at(2.0)
            exponent, log_power = fixed_r_cost_exponent(alpha, gamma, 2.0, numerator)
            return CostExponent(exponent, log_power, _hilbert_case(numerator))
        q_tilde = q if plan_inputs.q_tilde is None else plan_inputs.q_tilde
        shift, rate_sum = _affine_parts(rate)
        r_min_conj, r_max_conj = conjugate_fn(min(q_tilde, 2.0)), conjugate_fn(q)

    t = (gamma + shift) / rate_sum
    if plan_inputs.r_conj is None:
        case = mlmc_case(t, r_min_conj, r_max_conj, alpha, rate_sum)
        r_conj = r_conj_for_case(case, t, r_min_conj, r_max_conj)
    else:
        case, r_conj = CostCase.FIXED_R, plan_inputs.r_conj
    exponent, log_power = fixed_r_cost_exponent(
        alpha, gamma, r_conj, gamma + shift - rate_sum * r_conj
    )
    return CostExponent(exponent, log_power, case)


def _require_spec(plan_inputs: PlanInputs) -> SpaceSpec:
    if plan_inputs.spec is None:
        raise ValueError(f"{plan_inputs.regime.value} prediction needs a SpaceSpec")
    return plan_inputs.spec
