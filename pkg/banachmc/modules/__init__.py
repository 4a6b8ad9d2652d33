from .models import BvpModel, FaModel, make_level_sampler
from .sampling import LevelSampler, ReplicateSeeder, mlmc_estimate, slmc_estimate
from .spaces import Partition, dyadic_level_map, make_partition
from .systems import ExperimentConfig, RunRecord, load_experiment_config
from .tensors import assemble_dual, injective_norm_multistart
from .theory import AllocationPlan, RateModel, SpaceSpec

__all__ = [
    "AllocationPlan",
    "BvpModel",
    "ExperimentConfig",
    "FaModel",
    "LevelSampler",
    "Partition",
    "RateModel",
    "ReplicateSeeder",
    "RunRecord",
    "SpaceSpec",
    "assemble_dual",
    "dyadic_level_map",
    "injective_norm_multistart",
    "load_experiment_config",
    "make_level_sampler",
    "make_partition",
    "mlmc_estimate",
    "slmc_estimate",
]
