from enum import Enum, IntEnum


class MeshKind(str, Enum):
    UNIFORM = "uniform"
    GRADED = "graded"


class BasisKind(str, Enum):
    NODAL = "nodal"
    CELL = "cell"


class DualBasis(str, Enum):
    """Discrete dual space used by the injective norm."""

    NODAL = "nodal"
    CELL = "cell"


class Representation(str, Enum):
    CELL_AVERAGE = "cell_average"
    MIDPOINT = "midpoint"


class BetaKind(str, Enum):
    CONSTANT = "constant"
    AFFINE_IN_INV_R = "affine_in_inv_r"


class Regime(str, Enum):
    SLMC = "slmc"
    MLMC = "mlmc"


class PlanRegime(str, Enum):
    SLMC = "slmc"
    DIM_DEP = "dim_dep"
    MINKOWSKI = "minkowski"


class ConstantMode(str, Enum):
    FULL = "full"
    RATES_ONLY = "rates_only"


class CostCase(str, Enum):
    SLMC_Q_BAR = "slmc_q_bar"
    SLMC_P = "slmc_p"
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    INTERIOR_FAST_BIAS = "interior_fast_bias"
    INTERIOR_BALANCED = "interior_balanced"
    BEYOND_FAST_BIAS = "beyond_fast_bias"
    BEYOND_SLOW_BIAS = "beyond_slow_bias"
    HILBERT_VARIANCE = "hilbert_variance"
    HILBERT_CRITICAL = "hilbert_critical"
    HILBERT_COST = "hilbert_cost"
    FIXED_R = "fixed_r"


class Schedule(str, Enum):
    HILBERT = "hilbert"
    TYPE_P = "type_p"
    DIM_DEP = "dim_dep"
    DIM_DEP_EPS = "dim_dep_eps"
    MINKOWSKI = "minkowski"


class EtaRule(str, Enum):
    SHARP = "sharp"
    FIXED = "fixed"


class RecordLayout(str, Enum):
    SWEEP = "sweep"
    RATES = "rates"
    NORM = "norm"


class ExperimentKind(str, Enum):
    RATES_TABLE1 = "rates_table1"
    RATES_TABLE2 = "rates_table2"
    RATES_TABLE3 = "rates_table3"
    RATES_TABLE4 = "rates_table4"
    SLMC_BVP = "slmc_bvp"
    SLMC_FA = "slmc_fa"
    MLMC_FA = "mlmc_fa"
    MOMENT2_BVP = "moment2_bvp"
    MOMENT2_FA = "moment2_fa"
    INJECTIVE_NORM = "injective_norm"


class BaseExperiment(str, Enum):
    RATES_TABLE1 = "rates_table1.json"
    RATES_TABLE2 = "rates_table2.json"
    RATES_TABLE3 = "rates_table3.json"
    RATES_TABLE4 = "rates_table4.json"
    SLMC_BVP = "slmc_bvp.json"
    SLMC_FA = "slmc_fa.json"
    MLMC_FA = "mlmc_fa.json"
    MLMC_FA_COST = "mlmc_fa_cost.json"
    MOMENT2_BVP = "moment2_bvp.json"
    MOMENT2_FA = "moment2_fa.json"
    INJECTIVE_NORM = "injective_norm.json"


class ExitCode(IntEnum):
    OK = 0
    FAILURE = 1
    INVALID_CONFIG = 2


SUBCOMMAND_EXPERIMENTS = {
    "rates": (
        ExperimentKind.RATES_TABLE1,
        ExperimentKind.RATES_TABLE2,
        ExperimentKind.RATES_TABLE3,
        ExperimentKind.RATES_TABLE4,
    ),
    "slmc": (ExperimentKind.SLMC_BVP, ExperimentKind.SLMC_FA),
    "mlmc": (ExperimentKind.MLMC_FA,),
    "moment2": (ExperimentKind.MOMENT2_BVP, ExperimentKind.MOMENT2_FA),
    "injective-norm": (ExperimentKind.INJECTIVE_NORM,),
}

SWEEP_COLUMNS = (
    "eps",
    "level_L",
    "M_list",
    "err_measured",
    "err_bound",
    "cost_units",
    "wall_seconds",
    "r_used",
    "case_label",
)
RATES_COLUMNS = ("param_p", "param_q", "M", "err", "fitted_rate", "theory_rate")
NORM_COLUMNS = (
    "instance",
    "value",
    "iterations",
    "converged",
    "restarts_used",
    "bruteforce_value",
)

# Relative tolerance for deciding that two rate expressions sit on a case boundary
CASE_RTOL = 1e-9

# Split points beyond this count are thinned evenly before building quadrature panels
MAX_SPLIT_POINTS = 10_000

GEOMETRIC_DEPTH = 40
