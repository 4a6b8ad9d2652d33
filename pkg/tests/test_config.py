import json
import math

import pytest

from banachmc.common_values import (
    GEOMETRIC_DEPTH,
    SWEEP_COLUMNS,
    BaseExperiment,
    ExperimentKind,
    RecordLayout,
    Schedule,
)
from banachmc.exceptions import ConfigError
from banachmc.modules.systems import (
    ExperimentConfig,
    QuadratureConfig,
    RunRecord,
    config_from_dict,
    format_cell,
    load_experiment_config,
    load_raw_config,
    merge_overrides,
    parse_cell,
    plot_data,
)


def config_error_field(raw, paper_scale=False) -> str:
    with pytest.raises(ConfigError) as err:
        config_from_dict(raw, paper_scale)
    return err.value.field


def test_every_builtin_config_loads():
    for base in BaseExperiment:
        config = load_experiment_config(base)
        assert isinstance(config, ExperimentConfig)
        assert not config.paper_scale
        assert load_experiment_config(base, paper_scale=True).paper_scale


def test_builtin_names_with_and_without_suffix():
    assert load_raw_config("mlmc_fa") == load_raw_config(BaseExperiment.MLMC_FA)
    assert load_raw_config("mlmc_fa.json") == load_raw_config(BaseExperiment.MLMC_FA)


def test_config_from_a_file(tmp_path):
    raw = load_raw_config("injective_norm")
    raw["seed"] = 12
    path = tmp_path / "custom.json"
    path.write_text(json.dumps(raw))
    assert load_experiment_config(str(path)).seed == 12

    with pytest.raises(ConfigError) as err:
        load_raw_config(str(tmp_path / "missing.json"))
    assert err.value.field == "config"

    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ConfigError) as err:
        load_raw_config(str(broken))
    assert err.value.field == "config"


def test_paper_scale_overrides_are_deep_merged():
    desk = load_experiment_config("rates_table4")
    full = load_experiment_config("rates_table4", paper_scale=True)
    assert desk.replication.K == 200
    assert full.replication.K == 1000
    assert desk.quadrature.tensor_cells == 32
    assert full.quadrature.tensor_cells == 64
    assert full.quadrature.tensor_nodes == desk.quadrature.tensor_nodes


def test_merge_overrides_leaves_the_base_alone():
    base = {"schedule": {"tolerances": [0.1], "level_min": 2}, "seed": 0}
    merged = merge_overrides(base, {"schedule": {"tolerances": [0.2, 0.1]}, "seed": 3})
    assert merged == {"schedule": {"tolerances": [0.2, 0.1], "level_min": 2}, "seed": 3}
    assert base["schedule"]["tolerances"] == [0.1]


def test_invalid_fields_are_named():
    raw = load_raw_config("slmc_bvp")
    assert config_error_field({**raw, "seed": -1}) == "seed"
    assert config_error_field({**raw, "threads": 0}) == "threads"
    assert config_error_field({**raw, "colour": "blue"}) == "colour"
    assert config_error_field({**raw, "schedule": {**raw["schedule"], "bogus": 1}}) == "schedule.bogus"
    assert config_error_field({**raw, "replication": {"K": 0}}) == "replication.K"
    assert config_error_field({**raw, "model": {"p": 1.5, "mesh": "curved"}}) == "model.mesh"
    assert config_error_field({**raw, "rates": {"A": 3.0}}) == "rates.A"
    assert config_error_field({**raw, "model": {"p": 2.0, "eta": 1.6}}) == "model.p"
    assert config_error_field({"seed": 0}) == "experiment"
    assert config_error_field({**raw, "model": []}) == "model"


def test_tolerances_must_decrease():
    raw = load_raw_config("slmc_bvp")
    for tolerances in ([0.1, 0.2], [0.1, 0.1], [0.6, 0.1], [], [0.1, 0.0]):
        schedule = {**raw["schedule"], "tolerances": tolerances}
        assert config_error_field({**raw, "schedule": schedule}) == "schedule.tolerances"


def test_rate_tables_need_sizes_and_pairs():
    raw = load_raw_config("rates_table2")
    schedule = {**raw["schedule"], "sample_sizes": [100]}
    assert config_error_field({**raw, "schedule": schedule}) == "schedule.sample_sizes"
    schedule = {**raw["schedule"], "sample_sizes": [100, 10]}
    assert config_error_field({**raw, "schedule": schedule}) == "schedule.sample_sizes"
    assert config_error_field({**raw, "model": {**raw["model"], "pairs": []}}) == "model.pairs"
    assert config_error_field({**raw, "model": {**raw["model"], "pairs": [[1.5]]}}) == "model.pairs"


def test_second_moment_integrability_is_validated():
    raw = load_raw_config("rates_table4")
    model = {**raw["model"], "pairs": [[1.0, 1.5], [2.0, 1.1]]}
    assert config_error_field({**raw, "model": model}) == "model.pairs"

    raw = load_raw_config("moment2_fa")
    assert config_error_field({**raw, "model": {**raw["model"], "p": 2.0, "q": 1.1}}) == "model.p"


def test_schedules_per_experiment():
    raw = load_raw_config("slmc_bvp")
    config = config_from_dict({**raw, "schedule": {**raw["schedule"], "schedules": []}})
    assert config.schedule.schedules == [Schedule.HILBERT, Schedule.TYPE_P, Schedule.DIM_DEP_EPS]

    raw = load_raw_config("mlmc_fa")
    schedule = {**raw["schedule"], "schedules": ["hilbert"]}
    assert config_error_field({**raw, "schedule": schedule}) == "schedule.schedules"
    schedule = {**raw["schedule"], "schedules": ["quadratic"]}
    assert config_error_field({**raw, "schedule": schedule}) == "schedule.schedules"


def test_outer_exponent():
    assert load_experiment_config("slmc_bvp").q_outer == 2.0
    assert load_experiment_config("mlmc_fa").q_outer == 1.5
    raw = load_raw_config("mlmc_fa")
    assert config_from_dict({**raw, "replication": {"q_outer": 1.2}}).q_outer == 1.2


def test_config_hash():
    raw = load_raw_config("injective_norm")
    first = config_from_dict(raw)
    assert first.config_hash() == config_from_dict(raw).config_hash()
    assert first.config_hash() != config_from_dict({**raw, "seed": 1}).config_hash()
    assert first.to_dict()["experiment"] == "injective_norm"
    assert first.experiment == ExperimentKind.INJECTIVE_NORM


def sweep_record() -> RunRecord:
    record = RunRecord("slmc_fa", RecordLayout.SWEEP, config={"seed": 0}, config_hash="abc")
    for eps in (0.1, 0.05, 0.025):
        record.add_row(
            eps=eps,
            level_L=4,
            M_list=(int(4 / eps**2),),
            err_measured=0.5 * eps,
            err_bound=0.9 * eps,
            cost_units=3.0 * eps**-2,
            wall_seconds=0.01,
            r_used=2.0,
            case_label="hilbert",
        )
    return record


def test_empty_record_is_a_header():
    record = RunRecord("slmc_fa", "sweep")
    assert record.emit_csv() == ",".join(SWEEP_COLUMNS) + "\n"
    parsed = RunRecord.parse_csv(record.emit_csv())
    assert parsed.layout == RecordLayout.SWEEP
    assert parsed.rows == []


def test_csv_round_trip():
    record = RunRecord("mlmc_fa", RecordLayout.SWEEP)
    record.add_row(eps=0.1, level_L=5, M_list=(40, 12, 3), err_bound=0.07, cost_units=124.0,
                   wall_seconds=0.0, r_used=2.0, case_label="interior_fast_bias")
    record.add_row(eps=0.05, level_L=6, M_list=[90, 30, 8, 2], err_measured=0.01, err_bound=0.04,
                   cost_units=512.0, wall_seconds=0.0, r_used=1.5, case_label="fixed_r")
    text = record.emit_csv()
    assert len(text.splitlines()) == 3
    assert text.splitlines()[1].split(",")[2] == "40;12;3"

    parsed = RunRecord.parse_csv(text, experiment="mlmc_fa")
    assert parsed.rows == record.rows
    assert parsed.rows[0]["err_measured"] is None
    assert parsed.emit_csv() == text


def test_record_rejects_unknown_columns_and_headers():
    record = RunRecord("rates_table1", RecordLayout.RATES)
    with pytest.raises(KeyError):
        record.add_row(param_p=1.5, level_L=3)
    with pytest.raises(ValueError):
        RunRecord.parse_csv("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        RunRecord.parse_csv("param_p,param_q,M,err,fitted_rate,theory_rate\n1,2\n")


def test_record_save_and_read(tmp_path):
    record = sweep_record()
    record.fits["bias"] = [1.0, 0.9]
    record.metadata["seed"] = "0"
    path = record.save(tmp_path / "runs" / "slmc_fa.msgpack")
    loaded = RunRecord.read_from_file(path)
    assert loaded.rows == record.rows
    assert loaded.config == record.config
    assert loaded.config_hash == "abc"
    assert loaded.fits == {"bias": [1.0, 0.9]}
    assert loaded.metadata == {"seed": "0"}


def test_cells():
    assert format_cell("converged", True) == "true"
    assert format_cell("eps", 0.1) == "0.1"
    assert format_cell("err_measured", None) == ""
    assert parse_cell("M_list", "3;2") == (3, 2)
    assert parse_cell("level_L", "7") == 7
    with pytest.raises(ValueError):
        parse_cell("converged", "yes")


def test_finite_rows():
    record = RunRecord("rates_table2", RecordLayout.RATES)
    record.add_row(param_p=1.0, param_q=1.5, M=10, err=0.1, fitted_rate=0.3, theory_rate=1 / 3)
    record.add_row(param_p=1.0, param_q=1.5, M=100, err=math.nan, fitted_rate=0.3, theory_rate=1 / 3)
    record.add_row(param_p=1.0, param_q=1.5, M=1000, fitted_rate=0.3, theory_rate=1 / 3)
    assert [row["M"] for row in record.finite_rows("err")] == [10]


def test_sweep_plot_data():
    error_plot, cost_plot, time_plot = plot_data(sweep_record(), cost_exponent=2.0)
    eps_line = error_plot.by_name("eps")
    assert eps_line.reference
    measured = error_plot.by_name("hilbert")
    assert all(err < eps for eps, err in zip(measured.x, measured.y))
    assert cost_plot.fitted_slopes["hilbert"] == pytest.approx(2.0)
    reference = cost_plot.by_name("hilbert eps^-2")
    assert reference.y[0] == pytest.approx(cost_plot.by_name("hilbert").y[0])
    assert time_plot.y_label == "wall seconds"

    with pytest.raises(KeyError):
        cost_plot.by_name("type_p")


def test_sweep_plot_data_uses_recorded_exponents():
    record = sweep_record()
    _, cost_plot, _ = plot_data(record)
    assert not any(series.reference for series in cost_plot.series)

    record.fits["predicted_cost_exponent"] = [2.0, 0.0]
    record.add_row(eps=0.1, level_L=4, M_list=(400,), err_bound=0.09, cost_units=9000.0,
                   wall_seconds=0.0, r_used=1.5, case_label="fixed_r")
    record.add_row(eps=0.05, level_L=5, M_list=(3200,), err_bound=0.04, cost_units=72000.0,
                   wall_seconds=0.0, r_used=1.5, case_label="fixed_r")
    record.fits["fixed_r_cost_exponent"] = [3.0, 0.0]
    _, cost_plot, _ = plot_data(record)
    assert cost_plot.by_name("hilbert eps^-2").y[-1] == pytest.approx(3.0 * 0.1**-2 * 4**2)
    assert cost_plot.by_name("fixed_r eps^-3").y == pytest.approx((9000.0, 72000.0))


def test_rates_plot_data():
    record = RunRecord("rates_table2", RecordLayout.RATES)
    for M in (10, 100, 1000):
        record.add_row(param_p=1.0, param_q=2.0, M=M, err=M**-0.5, fitted_rate=0.5, theory_rate=0.5)
    (plot,) = plot_data(record)
    measured = plot.by_name("p=1, q=2")
    theory = plot.by_name("p=1, q=2 theory")
    assert theory.y == pytest.approx(measured.y)
    assert plot.fitted_slopes["p=1, q=2"] == 0.5

    with pytest.raises(ValueError):
        plot_data(RunRecord("injective_norm", RecordLayout.NORM))


def test_quadrature_config_depth_default():
    assert QuadratureConfig().geometric_depth == GEOMETRIC_DEPTH
