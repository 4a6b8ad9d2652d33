from .experiment_config import (
    ExperimentConfig,
    InjectiveConfig,
    ModelConfig,
    QuadratureConfig,
    RateConfig,
    ReplicationConfig,
    ScheduleConfig,
    config_from_dict,
    load_experiment_config,
    load_raw_config,
    merge_overrides,
)
from .plot_data import PlotData, Series, plot_data
from .run_record import RunRecord, format_cell, parse_cell

__all__ = [
    "ExperimentConfig",
    "InjectiveConfig",
    "ModelConfig",
    "PlotData",
    "QuadratureConfig",
    "RateConfig",
    "ReplicationConfig",
    "RunRecord",
    "ScheduleConfig",
    "Series",
    "config_from_dict",
    "format_cell",
    "load_experiment_config",
    "load_raw_config",
    "merge_overrides",
    "parse_cell",
    "plot_data",
]
