import numpy as np
import pytest

from banachmc.common_values import CostCase, MeshKind, Regime
from banachmc.exceptions import EstimationError, EvaluationError
from banachmc.modules.sampling import (
    ConstantSampler,
    ErrorMeasurement,
    LevelSampler,
    ReplicateSeeder,
    as_seeder,
    experiment_key,
    fit_rate_loglog,
    fit_strong_rates,
    mlmc_estimate,
    prefix_means,
    replicate_error,
    second_moment_mlmc,
    second_moment_slmc,
    slmc_estimate,
)
from banachmc.modules.spaces import dyadic_level_map, make_partition, nodal_interpolate, prolong
from banachmc.modules.theory import AllocationPlan


class ScaledParabolaSampler(LevelSampler):
    """X = U * I_l(x^2) with U uniform on [0, 1)."""

    def draw(self, rng, size):
        return rng.random(size)

    def evaluate(self, level, params):
        return np.outer(params, self.level_space(level).nodes ** 2)


class FailingSampler(ScaledParabolaSampler):
    def evaluate(self, level, params):
        raise EvaluationError("non-finite value", index=0)


def mlmc_plan(levels, M):
    return AllocationPlan(
        Regime.MLMC, 2.0, 2.0, levels[-1], tuple(M), 0.0, CostCase.FIXED_R, levels=tuple(levels)
    )


def constant_sampler():
    fn = nodal_interpolate(lambda x: x * (1 - x), make_partition(2))
    return fn, ConstantSampler(fn, dyadic_level_map(MeshKind.UNIFORM))


def test_slmc_of_a_constant_sampler():
    fn, sampler = constant_sampler()
    output = slmc_estimate(sampler, 2, 5, seed=0)
    np.testing.assert_allclose(
        output.estimate.nodal_values, prolong(fn, make_partition(4)).nodal_values, atol=1e-15
    )
    assert output.samples_drawn == (5,)
    assert output.wall_cost == 20.0
    assert output.plan is None


def test_mlmc_of_a_constant_sampler_telescopes():
    fn, sampler = constant_sampler()
    output = mlmc_estimate(sampler, mlmc_plan((1, 2, 3), (4, 2, 1)), seed=3)
    np.testing.assert_allclose(
        output.estimate.nodal_values, prolong(fn, make_partition(8)).nodal_values, atol=1e-14
    )
    assert output.samples_drawn == (4, 2, 1)
    assert output.wall_cost == 4 * 2 + 2 * 4 + 1 * 8

    second = second_moment_mlmc(sampler, mlmc_plan((1, 2, 3), (4, 2, 1)), seed=3)
    finest = prolong(fn, make_partition(8)).nodal_values
    np.testing.assert_allclose(second.estimate.values, np.outer(finest, finest), atol=1e-14)


def test_single_sample_estimate_is_the_sample():
    sampler = ScaledParabolaSampler(dyadic_level_map())
    output = slmc_estimate(sampler, 3, 1, seed=9)
    sample = sampler.sample(3, ReplicateSeeder(9).generator(0, 3))
    np.testing.assert_array_equal(output.estimate.nodal_values, sample.nodal_values)


def test_one_level_plan_equals_slmc():
    sampler = ScaledParabolaSampler(dyadic_level_map())
    single = slmc_estimate(sampler, 1, 7, seed=4, replicate=2)
    multi = mlmc_estimate(sampler, mlmc_plan((1,), (7,)), seed=4, replicate=2)
    np.testing.assert_array_equal(single.estimate.nodal_values, multi.estimate.nodal_values)


def test_chunking_does_not_change_the_estimate():
    sampler = ScaledParabolaSampler(dyadic_level_map())
    whole = slmc_estimate(sampler, 2, 11, seed=1)
    chunked = slmc_estimate(sampler, 2, 11, seed=1, chunk_size=3)
    np.testing.assert_allclose(whole.estimate.nodal_values, chunked.estimate.nodal_values, rtol=1e-14)


def test_second_moment_estimates():
    sampler = ScaledParabolaSampler(dyadic_level_map())
    output = second_moment_slmc(sampler, 2, 2, seed=5)
    rows = sampler.sample_batch(2, ReplicateSeeder(5).generator(0, 2), 2)
    expected = 0.5 * (np.outer(rows[0], rows[0]) + np.outer(rows[1], rows[1]))
    np.testing.assert_allclose(output.estimate.values, expected, rtol=1e-14)

    multi = second_moment_mlmc(sampler, mlmc_plan((1, 2, 3), (6, 3, 2)), seed=5)
    np.testing.assert_array_equal(multi.estimate.values, multi.estimate.values.T)
    assert multi.estimate.partition.n_cells == 8


def test_mlmc_is_unbiased():
    sampler = ScaledParabolaSampler(dyadic_level_map())
    plan = mlmc_plan((1, 2, 3), (20, 10, 5))
    seeder = ReplicateSeeder(17, "unbiased")
    estimates = np.array(
        [mlmc_estimate(sampler, plan, seeder, replicate=k).estimate.nodal_values for k in range(100)]
    )
    expected = 0.5 * make_partition(8).nodes ** 2
    standard_error = estimates.std(axis=0, ddof=1) / np.sqrt(100)
    assert np.all(np.abs(estimates.mean(axis=0) - expected) <= 4 * standard_error + 1e-12)


def test_invalid_estimator_inputs():
    sampler = ScaledParabolaSampler(dyadic_level_map())
    for M in (0, -3, 2.5, True):
        with pytest.raises(ValueError):
            slmc_estimate(sampler, 2, M, seed=0)
    with pytest.raises(ValueError):
        mlmc_estimate(sampler, mlmc_plan((2, 3), (4, 2)), seed=0)
    slmc_plan = AllocationPlan(Regime.SLMC, 2.0, 2.0, 3, (4,), 0.0, CostCase.SLMC_Q_BAR)
    with pytest.raises(ValueError):
        mlmc_estimate(sampler, slmc_plan, seed=0)


def test_sampler_failures_are_located():
    sampler = FailingSampler(dyadic_level_map())
    with pytest.raises(EstimationError) as err:
        mlmc_estimate(sampler, mlmc_plan((1, 2), (3, 2)), seed=0)
    assert err.value.level == 1
    assert err.value.sample == 0


def test_error_measurement():
    assert ErrorMeasurement((1.0, 3.0)).aggregated == pytest.approx(np.sqrt(5.0))
    assert ErrorMeasurement((1.0, 3.0), q_outer=1.0).aggregated == pytest.approx(2.0)
    assert ErrorMeasurement((0.5,)).K == 1
    with pytest.raises(ValueError):
        ErrorMeasurement(())
    with pytest.raises(ValueError):
        ErrorMeasurement((1.0,), q_outer=0.5)


def test_replicate_error():
    def sup_distance(estimate, exact):
        return float(np.max(np.abs(estimate.nodal_values - exact)))

    fn, sampler = constant_sampler()
    exact = prolong(fn, make_partition(4)).nodal_values
    zero = replicate_error(
        lambda k: slmc_estimate(sampler, 2, 3, 0, replicate=k).estimate, exact, sup_distance, K=4
    )
    assert zero.aggregated == pytest.approx(0.0, abs=1e-15)
    assert zero.K == 4

    sampler = ScaledParabolaSampler(dyadic_level_map())
    exact = 0.5 * make_partition(4).nodes ** 2
    seeder = ReplicateSeeder(2, "replicates")

    def make_estimate(k):
        return slmc_estimate(sampler, 2, 10, seeder, replicate=k).estimate

    serial = replicate_error(make_estimate, exact, sup_distance, K=12)
    threaded = replicate_error(make_estimate, exact, sup_distance, K=12, workers=4)
    assert serial.per_replicate_errors == threaded.per_replicate_errors
    assert len(set(serial.per_replicate_errors)) > 1

    single = replicate_error(make_estimate, exact, sup_distance, K=1)
    assert single.aggregated == pytest.approx(serial.per_replicate_errors[0])

    with pytest.raises(ValueError):
        replicate_error(make_estimate, exact, sup_distance, K=0)


def test_replicate_error_reports_the_replicate():
    def make_estimate(k):
        if k == 2:
            raise ValueError("broken replicate")
        return 0.0

    with pytest.raises(EstimationError) as err:
        replicate_error(make_estimate, 0.0, lambda a, b: abs(a - b), K=4)
    assert err.value.replicate == 2


def test_fit_rate_loglog():
    xs = np.array([1.0, 2.0, 4.0, 8.0])
    C, rate = fit_rate_loglog(xs, 3.0 * xs**-1.5)
    assert C == pytest.approx(3.0)
    assert rate == pytest.approx(1.5)

    C, rate = fit_rate_loglog([10, 100, 1000], [0.5, 0.5, 0.5])
    assert rate == pytest.approx(0.0, abs=1e-12)

    with pytest.raises(ValueError):
        fit_rate_loglog([1.0], [1.0])
    with pytest.raises(ValueError):
        fit_rate_loglog([1.0, 2.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        fit_rate_loglog([1.0, 2.0, 3.0], [1.0, 2.0])


def test_fit_strong_rates():
    dims = np.array([2.0, 4.0, 8.0, 16.0, 32.0])
    norms = {r: 2.0 * dims ** -(0.3 + 1.0 / r) for r in (1.2, 1.5, 2.0)}
    fit = fit_strong_rates(dims, norms)
    assert fit.b0 == pytest.approx(0.3)
    assert fit.b1 == pytest.approx(1.0)
    assert fit.C_beta == pytest.approx(2.0)
    assert fit.betas[1.5] == pytest.approx(0.3 + 1 / 1.5)

    with pytest.raises(ValueError):
        fit_strong_rates(dims, {2.0: norms[2.0]})


def test_prefix_means():
    params = np.random.default_rng(0).random(50)
    means = prefix_means(lambda block: np.array([block.sum()]), params, [1, 7, 50], chunk_size=4)
    for mean, m in zip(means, (1, 7, 50)):
        assert mean[0] == pytest.approx(params[:m].mean(), rel=1e-12)

    with pytest.raises(ValueError):
        prefix_means(np.sum, params, [7, 3])
    with pytest.raises(ValueError):
        prefix_means(np.sum, params, [60])


def test_seeder_streams():
    seeder = ReplicateSeeder(11, "streams")
    short = seeder.generator(0, 1).random(5)
    np.testing.assert_array_equal(seeder.generator(0, 1).random(10)[:5], short)
    assert not np.array_equal(seeder.generator(1, 1).random(5), short)
    assert not np.array_equal(seeder.generator(0, 2).random(5), short)
    assert not np.array_equal(ReplicateSeeder(11, "other").generator(0, 1).random(5), short)

    assert experiment_key("streams") == experiment_key("streams")
    assert seeder.sample_seed(0, 1, 3) == ReplicateSeeder(11, "streams").sample_seed(0, 1, 3)
    assert as_seeder(seeder) is seeder
    assert as_seeder(5).seed == 5

    with pytest.raises(ValueError):
        ReplicateSeeder(-1)
    with pytest.raises(ValueError):
        seeder.generator(-1, 0)
