import json

import pytest

from banachmc.cli import build_parser, main, parse_csv
from banachmc.common_values import NORM_COLUMNS, ExitCode
from banachmc.modules.systems import RunRecord, load_raw_config


@pytest.fixture
def small_norm_config(tmp_path):
    raw = load_raw_config("injective_norm")
    raw["injective"].update({"dims": [3], "instances": 2, "restarts": 2})
    path = tmp_path / "norm.json"
    path.write_text(json.dumps(raw))
    return str(path)


def test_run_writes_csv_and_record(tmp_path, small_norm_config):
    out = tmp_path / "results" / "norm.csv"
    code = main(["injective-norm", "--config", small_norm_config, "--out", str(out), "--seed", "4"])
    assert code == ExitCode.OK
    record = parse_csv(out)
    assert len(record.rows) == 2
    assert record.experiment == "norm"
    saved = RunRecord.read_from_file(out.with_suffix(".msgpack"))
    assert saved.rows == record.rows
    assert saved.metadata["seed"] == "4"


def test_run_prints_csv_without_out(capsys, small_norm_config):
    assert main(["injective-norm", "--config", small_norm_config]) == ExitCode.OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(NORM_COLUMNS)
    assert len(lines) == 3


def test_invalid_configuration_exit_code(capsys, tmp_path, small_norm_config):
    assert main(["slmc", "--config", str(tmp_path / "missing.json")]) == ExitCode.INVALID_CONFIG
    assert "config" in capsys.readouterr().err

    assert main(["injective-norm", "--config", small_norm_config, "--seed", "-1"]) == 2
    assert "seed" in capsys.readouterr().err

    assert main(["injective-norm", "--config", small_norm_config, "--threads", "0"]) == 2


def test_subcommand_must_match_the_experiment(capsys):
    assert main(["mlmc", "--config", "slmc_bvp"]) == ExitCode.INVALID_CONFIG
    assert "experiment" in capsys.readouterr().err


def test_parser():
    parser = build_parser()
    args = parser.parse_args(["moment2", "--paper-scale", "--threads", "3"])
    assert args.config == "moment2_fa.json"
    assert args.paper_scale
    assert args.threads == 3
    with pytest.raises(SystemExit):
        parser.parse_args([])
    with pytest.raises(SystemExit):
        parser.parse_args(["plot"])
