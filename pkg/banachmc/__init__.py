from .experiment import Experiment
from .modules.systems import ExperimentConfig, RunRecord, load_experiment_config

__all__ = ["Experiment", "ExperimentConfig", "RunRecord", "load_experiment_config"]
