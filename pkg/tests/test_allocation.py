import math

import numpy as np
import pytest

from banachmc.common_values import ConstantMode, CostCase, PlanRegime, Regime
from banachmc.exceptions import UnsupportedRegimeError
from banachmc.modules.theory import (
    AllocationPlan,
    PlanInputs,
    RateModel,
    SpaceSpec,
    choose_finest_level,
    choose_r_dim_dep,
    choose_r_minkowski,
    conjugate,
    level_sum,
    level_sum_asymptote,
    lp_seq_space_spec,
    mlmc_plan_dim_dep,
    mlmc_plan_minkowski,
    predicted_cost_exponent,
    schedule_samples,
    slmc_plan,
    slmc_samples,
)


def fa_rate(p: float, eta: float = 1.1) -> RateModel:
    return RateModel(alpha=1 / p - (eta - 1), b0=1 / p - eta, b1=1.0)


def test_rate_model():
    rate = RateModel(alpha=1.0)
    assert rate.n_of_level(3) == 8
    assert rate.levels(4) == (1, 2, 3, 4)
    np.testing.assert_array_equal(rate.dims(3), [2.0, 4.0, 8.0])
    assert RateModel(alpha=1.0, level_offset=2).n_of_level(1) == 8
    assert fa_rate(1.0).beta_at(2.0) == pytest.approx(0.4)

    with pytest.raises(ValueError):
        RateModel(alpha=1.0, beta=1.0, b0=0.0, b1=1.0)
    with pytest.raises(ValueError):
        RateModel(alpha=1.0, b0=0.0)
    with pytest.raises(ValueError):
        RateModel(alpha=0.0)
    with pytest.raises(ValueError):
        RateModel(alpha=1.0, A=1.0)
    with pytest.raises(ValueError):
        RateModel(alpha=1.0, b0=-1.0, b1=1.0).beta_at(1.0)


def test_allocation_plan_validation():
    with pytest.raises(ValueError):
        AllocationPlan(Regime.SLMC, 2.0, 2.0, 3, (0,), 1.0, CostCase.SLMC_Q_BAR)
    with pytest.raises(ValueError):
        AllocationPlan(Regime.MLMC, 2.0, 2.0, 2, (4, 2), 1.0, CostCase.CRITICAL, levels=(2,))
    plan = AllocationPlan(Regime.SLMC, 2.0, 2.0, 3, (5,), 40.0, CostCase.SLMC_Q_BAR)
    assert plan.levels == (3,)
    assert plan.to_record()["M_list"] == "5"


def test_choose_finest_level():
    assert choose_finest_level(0.1, RateModel(alpha=1.0), 1.0) == 4
    assert choose_finest_level(0.25, RateModel(alpha=2.0), 1.0) == 2
    assert choose_finest_level(0.5, RateModel(alpha=1.0), 0.4) == 1
    assert choose_finest_level(0.5, RateModel(alpha=1.0, level_min=3), 0.4) == 3

    for eps in (0.0, 0.6, -0.1):
        with pytest.raises(ValueError):
            choose_finest_level(eps, RateModel(alpha=1.0), 1.0)
    with pytest.raises(ValueError):
        choose_finest_level(0.1, RateModel(alpha=1.0), 0.0)


def test_slmc_samples():
    assert slmc_samples(16, 1.0, lp_seq_space_spec(1.0, 2.0)) == 4096
    assert slmc_samples(32, 0.2, lp_seq_space_spec(1.5, 1.5)) == 8

    with pytest.raises(UnsupportedRegimeError):
        slmc_samples(16, 0.2, SpaceSpec(p=1.0, q=1.5, a1=0.5))


def test_slmc_plan():
    plan = slmc_plan(0.1, RateModel(alpha=1.0), lp_seq_space_spec(1.5, 2.0))
    assert plan.regime == Regime.SLMC
    assert plan.L == 6
    assert plan.N == (64,)
    assert plan.M == (16384,)
    assert plan.r == 2.0
    assert plan.cost_case == CostCase.SLMC_Q_BAR
    assert plan.predicted_cost == pytest.approx(64 * 16384)
    assert plan.error_bound < 0.1


def test_choose_r_minkowski_table():
    # q = 1.5, q_hat = 2: r' ranges over [2, 3]
    assert choose_r_minkowski(1.5, 2.0, 1.5, 1.0, 1.0) == 2.0
    assert choose_r_minkowski(1.5, 2.0, 2.0, 0.1, 1.0) == 2.0
    assert choose_r_minkowski(1.5, 2.0, 2.5, 1.0, 1.0) == 2.0
    assert choose_r_minkowski(1.5, 2.0, 2.5, 0.5, 1.0) == 2.5
    assert choose_r_minkowski(1.5, 2.0, 4.0, 1.2, 1.0) == 2.0
    assert choose_r_minkowski(1.5, 2.0, 4.0, 0.5, 1.0) == 3.0

    with pytest.raises(ValueError):
        choose_r_minkowski(2.0, 2.0, 2.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        choose_r_minkowski(1.5, 1.2, 2.5, 1.0, 1.0)


def test_choose_r_dim_dep_table():
    assert choose_r_dim_dep(1.5, 2.0, 1.8, 1.0, 1.0) == 2.0
    assert choose_r_dim_dep(1.5, 2.0, 2.5, 0.5, 1.0) == 2.5
    assert choose_r_dim_dep(1.5, 2.0, 3.5, 0.5, 1.0) == 3.0
    assert choose_r_dim_dep(1.0, 2.0, 5.0, 0.5, 1.0) == 5.0


def test_cost_exponent_first_moment():
    prediction = predicted_cost_exponent(
        PlanInputs(PlanRegime.MINKOWSKI, fa_rate(1.0), q=1.5, q_tilde=2.0)
    )
    assert prediction.exponent == pytest.approx(2.2222, abs=1e-3)
    assert prediction.log_power == 0.0
    assert prediction.case == CostCase.INTERIOR_FAST_BIAS

    baseline = predicted_cost_exponent(
        PlanInputs(PlanRegime.MINKOWSKI, fa_rate(1.0), q=1.5, q_tilde=2.0, r_conj=3.0)
    )
    assert baseline.exponent == pytest.approx(3.0)
    assert baseline.case == CostCase.FIXED_R

    prediction = predicted_cost_exponent(
        PlanInputs(PlanRegime.MINKOWSKI, fa_rate(1.2), q=1.5, q_tilde=2.0)
    )
    assert prediction.exponent == pytest.approx(2.7273, abs=1e-3)
    assert prediction.case == CostCase.INTERIOR_FAST_BIAS


def test_cost_exponent_second_moment():
    rate = RateModel(alpha=0.9, gamma=2.0, b0=0.17, b1=1.0)
    prediction = predicted_cost_exponent(PlanInputs(PlanRegime.MINKOWSKI, rate, q=1.5, q_tilde=2.0))
    t = 3 / 1.17
    assert prediction.case == CostCase.INTERIOR_BALANCED
    assert prediction.exponent == pytest.approx(t)
    assert prediction.log_power == pytest.approx(t + 1)

    baseline = predicted_cost_exponent(
        PlanInputs(PlanRegime.MINKOWSKI, rate, q=1.5, q_tilde=2.0, r_conj=3.0)
    )
    assert baseline.exponent == pytest.approx(3.0)


def test_cost_exponent_hilbert_branch():
    prediction = predicted_cost_exponent(
        PlanInputs(PlanRegime.MINKOWSKI, RateModel(alpha=1.0, beta=1.0), q=2.0)
    )
    assert prediction.exponent == pytest.approx(2.0)
    assert prediction.case == CostCase.HILBERT_VARIANCE

    prediction = predicted_cost_exponent(
        PlanInputs(PlanRegime.MINKOWSKI, RateModel(alpha=1.0, beta=0.25), q=2.0)
    )
    assert prediction.exponent == pytest.approx(2.5)
    assert prediction.case == CostCase.HILBERT_COST

    prediction = predicted_cost_exponent(
        PlanInputs(PlanRegime.MINKOWSKI, RateModel(alpha=1.0, beta=0.5), q=3.0)
    )
    assert prediction.exponent == pytest.approx(2.0)
    assert prediction.log_power == pytest.approx(3.0)
    assert prediction.case == CostCase.HILBERT_CRITICAL


def test_cost_exponent_slmc_and_dim_dep():
    spec = SpaceSpec(p=1.5, q=2.0, a0=1.0, a1=1 / 3)
    prediction = predicted_cost_exponent(PlanInputs(PlanRegime.SLMC, RateModel(alpha=1.0), spec))
    assert prediction.exponent == pytest.approx(10 / 3)
    assert prediction.case == CostCase.SLMC_Q_BAR

    rate = RateModel(alpha=1.0, beta=2 / 3)
    prediction = predicted_cost_exponent(PlanInputs(PlanRegime.DIM_DEP, rate, spec))
    assert prediction.case == CostCase.CRITICAL
    assert prediction.exponent == pytest.approx(2.0)
    assert prediction.log_power == pytest.approx(3.0)

    with pytest.raises(ValueError):
        predicted_cost_exponent(PlanInputs(PlanRegime.DIM_DEP, rate))


def test_mlmc_plan_minkowski_levels():
    plan = mlmc_plan_minkowski(0.05, fa_rate(1.0), 1.5, 2.0)
    assert plan.regime == Regime.MLMC
    assert plan.r_conj == 2.0
    assert plan.levels == tuple(range(1, plan.L + 1))
    assert len(plan.M) == plan.L
    assert all(m1 >= m2 for m1, m2 in zip(plan.M, plan.M[1:]))
    assert plan.error_bound < 0.05

    baseline = mlmc_plan_minkowski(0.05, fa_rate(1.0), 1.5, 2.0, r_conj=3.0)
    assert baseline.cost_case == CostCase.FIXED_R
    assert baseline.L == plan.L

    with pytest.raises(ValueError):
        mlmc_plan_minkowski(0.05, fa_rate(1.0), 1.5, 2.0, r_conj=4.0)
    with pytest.raises(ValueError):
        mlmc_plan_dim_dep(0.05, fa_rate(1.0), lp_seq_space_spec(1.5, 2.0))


def test_rates_only_plans_can_miss_the_tolerance():
    plan = mlmc_plan_minkowski(
        0.1, RateModel(alpha=1.0, beta=1.0), 2.0, mode=ConstantMode.RATES_ONLY
    )
    assert plan.L == 4
    assert plan.error_bound > 0.1


def branch_flags(t, r_min_conj, r_max_conj, alpha, rate_sum) -> dict[CostCase, bool]:
    fast_bias = alpha >= rate_sum
    interior = r_min_conj < t <= r_max_conj
    beyond = t > r_max_conj
    return {
        CostCase.SUBCRITICAL: t < r_min_conj,
        CostCase.CRITICAL: t == r_min_conj,
        CostCase.INTERIOR_FAST_BIAS: interior and fast_bias,
        CostCase.INTERIOR_BALANCED: interior and not fast_bias,
        CostCase.BEYOND_FAST_BIAS: beyond and fast_bias,
        CostCase.BEYOND_SLOW_BIAS: beyond and not fast_bias,
    }


def hilbert_flags(gamma, beta) -> dict[CostCase, bool]:
    return {
        CostCase.HILBERT_VARIANCE: 2 * beta > gamma,
        CostCase.HILBERT_CRITICAL: 2 * beta == gamma,
        CostCase.HILBERT_COST: 2 * beta < gamma,
    }


def assert_single_branch(flags, plan, prediction) -> None:
    (fired,) = [case for case, hit in flags.items() if hit]
    assert plan.cost_case == fired
    assert prediction.case == fired


def test_full_mode_plans_certify_the_tolerance():
    rng = np.random.default_rng(31)
    seen = set()
    for _ in range(200):
        eps = float(np.exp(rng.uniform(np.log(1e-2), np.log(0.5))))
        alpha = rng.uniform(0.5, 1.5)
        gamma = rng.uniform(0.5, 3.0)
        C_alpha, C_beta = rng.uniform(0.5, 2.0, size=2)

        q = rng.uniform(1.2, 1.9)
        b1 = rng.uniform(0.2, 1.5)
        b0 = rng.uniform(-b1 / 2 + 0.05, 1.0)
        rate = RateModel(alpha=alpha, gamma=gamma, C_alpha=C_alpha, C_beta=C_beta, b0=b0, b1=b1)
        q_tilde = rng.uniform(q, 3.0)
        plan = mlmc_plan_minkowski(eps, rate, q, q_tilde)
        assert plan.error_bound < eps
        cost = sum(rate.C_gamma * float(n) ** gamma * m for n, m in zip(plan.N, plan.M))
        assert plan.predicted_cost == pytest.approx(cost, rel=1e-12)
        t = (gamma + b1) / (b0 + b1)
        flags = branch_flags(t, conjugate(min(q_tilde, 2.0)), conjugate(q), alpha, b0 + b1)
        prediction = predicted_cost_exponent(
            PlanInputs(PlanRegime.MINKOWSKI, rate, q=q, q_tilde=q_tilde)
        )
        assert_single_branch(flags, plan, prediction)
        seen.add(plan.cost_case)

        p = rng.uniform(1.2, 2.0)
        spec = SpaceSpec(
            p=p,
            q=rng.uniform(p, 3.0),
            a0=rng.uniform(0.0, 1.0),
            a1=rng.uniform(0.0, 0.5),
            C_tau=rng.uniform(1.0, 4.0),
        )
        rate = RateModel(
            alpha=alpha, gamma=gamma, C_alpha=C_alpha, C_beta=C_beta, beta=rng.uniform(0.2, 1.5)
        )
        plan = mlmc_plan_dim_dep(eps, rate, spec)
        assert plan.error_bound < eps
        cost = sum(rate.C_gamma * float(n) ** gamma * m for n, m in zip(plan.N, plan.M))
        assert plan.predicted_cost == pytest.approx(cost, rel=1e-12)
        rate_sum = rate.beta + spec.a1
        t = (gamma + spec.a0) / rate_sum
        flags = branch_flags(t, spec.q_bar_conj, spec.p_conj, alpha, rate_sum)
        prediction = predicted_cost_exponent(PlanInputs(PlanRegime.DIM_DEP, rate, spec=spec))
        assert_single_branch(flags, plan, prediction)
        seen.add(plan.cost_case)

        q_hilbert = rng.uniform(2.0, 3.0)
        rate = RateModel(alpha=alpha, gamma=gamma, C_alpha=C_alpha, beta=rng.uniform(0.2, 1.5))
        plan = mlmc_plan_minkowski(eps, rate, q_hilbert)
        assert plan.error_bound < eps
        prediction = predicted_cost_exponent(PlanInputs(PlanRegime.MINKOWSKI, rate, q=q_hilbert))
        assert_single_branch(hilbert_flags(gamma, rate.beta), plan, prediction)
        seen.add(plan.cost_case)

    assert len(seen) >= 5


def test_level_sum_bounds():
    rate = RateModel(alpha=1.0)
    for L in range(1, 21):
        n_finest = float(rate.n_of_level(L))
        for e in (0.3, 2.0):
            ratio = level_sum(rate, L, e) / n_finest**e
            assert 1.0 - 1e-12 <= ratio <= 1.0 / (1.0 - 2.0**-e) + 1e-12
            assert level_sum_asymptote(rate, L, e) == n_finest**e
        for e in (-1.5, -0.3):
            S = level_sum(rate, L, e)
            assert 2.0**e - 1e-12 <= S <= 2.0**e / (1.0 - 2.0**e) + 1e-12
            assert level_sum_asymptote(rate, L, e) == 1.0
        assert level_sum(rate, L, 0.0) == L
        assert level_sum_asymptote(rate, L, 0.0) == L


def test_schedule_samples():
    assert schedule_samples("hilbert", 0.1, 1.5) == 100
    assert schedule_samples("type_p", 0.5, 1.5) == 8
    assert schedule_samples("dim_dep_eps", 0.5, 1.5, alpha=1.0) == math.ceil(2 ** (7 / 3))
    assert schedule_samples("minkowski", 0.5, 1.0, q_hat=1.5) == 8
    assert schedule_samples("minkowski", 0.5, 1.0, q_hat=3.0) == 4

    with pytest.raises(UnsupportedRegimeError):
        schedule_samples("type_p", 0.1, 1.0)
    with pytest.raises(ValueError):
        schedule_samples("dim_dep", 0.1, 1.5)
    with pytest.raises(ValueError):
        schedule_samples("hilbert", 0.6, 1.5)
