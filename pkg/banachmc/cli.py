from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path

from loguru import logger

from banachmc.common_values import SUBCOMMAND_EXPERIMENTS, BaseExperiment, ExitCode
from banachmc.exceptions import ConfigError, EstimationError, QuadratureError
from banachmc.experiment import Experiment
from banachmc.modules.systems import ExperimentConfig, RunRecord, config_from_dict, load_raw_config

DEFAULT_CONFIGS = {
    "rates": BaseExperiment.RATES_TABLE1,
    "slmc": BaseExperiment.SLMC_BVP,
    "mlmc": BaseExperiment.MLMC_FA,
    "moment2": BaseExperiment.MOMENT2_FA,
    "injective-norm": BaseExperiment.INJECTIVE_NORM,
}

HELP = {
    "rates": "Monte Carlo convergence rates at the continuous level",
    "slmc": "single-level error-vs-tolerance sweeps",
    "mlmc": "multilevel sweeps with optimized and baseline plans",
    "moment2": "second-moment sweeps",
    "injective-norm": "injective norm of random tensors",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="banachmc",
        description="Monte Carlo and multilevel Monte Carlo in L^p and W^(1,p)",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command, default in DEFAULT_CONFIGS.items():
        sub = subparsers.add_parser(command, help=HELP[command])
        sub.add_argument(
            "--config",
            default=default.value,
            help=f"built-in name or JSON path (default: {default.value})",
        )
        sub.add_argument("--seed", type=int, default=None)
        sub.add_argument("--out", default=None, help="CSV path; a .msgpack record is written next to it")
        sub.add_argument("--threads", type=int, default=None)
        sub.add_argument(
            "--paper-scale",
            action="store_true",
            help="apply the configuration's paper-scale overrides",
        )
        sub.add_argument("--log-level", default=None)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    raw = load_raw_config(args.config)
    for key, value in (
        ("seed", args.seed),
        ("out", args.out),
        ("threads", args.threads),
        ("logging_level", args.log_level),
    ):
        if value is not None:
            raw[key] = value
    config = config_from_dict(raw, args.paper_scale)
    if config.experiment not in SUBCOMMAND_EXPERIMENTS[args.command]:
        raise ConfigError(
            f"{config.experiment.value} is not run by the {args.command} subcommand", "experiment"
        )
    return config


def parse_csv(path: str | Path) -> RunRecord:
    path = Path(path)
    return RunRecord.parse_csv(path.read_text(), experiment=path.stem)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except ConfigError as err:
        print(f"invalid configuration, field {err.field}: {err}", file=sys.stderr)
        return ExitCode.INVALID_CONFIG

    try:
        record = Experiment(config).run()
    except ConfigError as err:
        print(f"invalid configuration, field {err.field}: {err}", file=sys.stderr)
        return ExitCode.INVALID_CONFIG
    except (EstimationError, QuadratureError) as err:
        logger.error(f"{config.experiment.value} failed: {err}")
        return ExitCode.FAILURE

    if not config.out:
        sys.stdout.write(record.emit_csv())
    return ExitCode.OK


if __name__ == "__main__":
    sys.exit(main())
