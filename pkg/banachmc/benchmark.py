from pathlib import Path

import numpy as np
import plotly.graph_objects as go
from pyinstrument import Profiler
from pyperf import Benchmark, Runner

from banachmc.common_values import DualBasis, MeshKind
from banachmc.modules.models import BvpMeanDerivative, BvpModel, FaModel, make_level_sampler
from banachmc.modules.sampling import ReplicateSeeder, mlmc_estimate
from banachmc.modules.spaces import dyadic_level_map, lp_norm_quadrature, make_partition
from banachmc.modules.tensors import assemble_dual, injective_norm_multistart
from banachmc.modules.theory import RateModel, mlmc_plan_minkowski

PATH_PROJECT = Path(__file__).parent.parent


def random_tensor(n_cells: int, rng: np.random.Generator) -> np.ndarray:
    U = np.zeros((n_cells + 1, n_cells + 1))
    U[1:, 1:] = rng.standard_normal((n_cells, n_cells))
    return U


def injective_norm(n_cells: int = 64, instances: int = 5):
    rng = np.random.default_rng(12345)
    dual = assemble_dual(make_partition(n_cells, MeshKind.UNIFORM), 1.5, DualBasis.CELL)
    for instance in range(instances):
        injective_norm_multistart(random_tensor(n_cells, rng), dual, restarts=8, seed=instance)


def mlmc_run(eps: float = 0.01):
    model = FaModel(1.0, 1.5, 1.1, "fixed")
    level_map = dyadic_level_map(MeshKind.UNIFORM)
    sampler = make_level_sampler(model, level_map, level_min=4)
    rate = RateModel(alpha=0.9, b0=model.b0, b1=model.b1, level_min=4)
    plan = mlmc_plan_minkowski(eps, rate, model.q, model.q_hat)
    mlmc_estimate(sampler, plan, ReplicateSeeder(0, "benchmark"))


def singular_quadrature(n_samples: int = 1000):
    model = BvpModel(1.5)
    ys = ReplicateSeeder(0, "benchmark").generator().random(n_samples)
    average = BvpMeanDerivative(ys, model.eta)
    lp_norm_quadrature(average, model.p, average.singularity, 1, 4, 0)


def profile(name: str, func, *args):
    profiler = Profiler()
    profiler.start()

    func(*args)

    profiler.stop()
    html = profiler.output_html()
    with (PATH_PROJECT / f"benchmarks/{name}_pyinstrument.html").open("w") as f:
        f.write(html)


def bench(name: str, func, *args):
    runner = Runner()
    res_pyperf = runner.bench_func(name=name, func=func, args=args)

    assert isinstance(res_pyperf, Benchmark)
    output_path = PATH_PROJECT / f"benchmarks/{name}_pyperf.html"
    output_pyperf(res_pyperf, output_path)


def output_pyperf(bench: Benchmark, output_path: Path):
    values = bench.get_values()

    if len(values) == 0:
        return

    mean = bench.mean()
    std = bench.stdev()

    fig = go.Figure()
    fig.add_trace(
        go.Histogram(
            x=values,
            name="Benchmark results",
            nbinsx=25,
        )
    )

    for x, color, text in (
        (mean, "green", f"mean: {mean:.2f}s"),
        (mean + std, "red", f"mean + std: {(mean + std):.2f}s"),
        (mean - std, "red", f"mean - std: {(mean - std):.2f}s"),
    ):
        fig.add_vline(
            x=x,
            line_width=3 if color == "green" else 2,
            line_dash="dash",
            line_color=color,
            annotation={"text": text},
        )

    fig.update_layout(
        title_text=f"Benchmark results: {bench.get_name()}",
        xaxis_title_text="Time (s)",
        yaxis_title_text="Count",
        bargap=0.01,
    )

    fig.write_html(output_path.as_posix())


def main():
    (PATH_PROJECT / "benchmarks").mkdir(exist_ok=True)
    profile("mlmc_run", mlmc_run)
    bench("injective_norm", injective_norm)
    bench("mlmc_run", mlmc_run)
    bench("singular_quadrature", singular_quadrature)


if __name__ == "__main__":
    main()
