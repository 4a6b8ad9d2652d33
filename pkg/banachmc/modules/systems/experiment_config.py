from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from loguru import logger

from banachmc.common_values import (
    GEOMETRIC_DEPTH,
    SUBCOMMAND_EXPERIMENTS,
    BaseExperiment,
    ConstantMode,
    DualBasis,
    EtaRule,
    ExperimentKind,
    MeshKind,
    Representation,
    Schedule,
)
from banachmc.exceptions import ConfigError

RATES_EXPERIMENTS = SUBCOMMAND_EXPERIMENTS["rates"]
SLMC_SCHEDULES = (Schedule.HILBERT, Schedule.TYPE_P, Schedule.DIM_DEP, Schedule.DIM_DEP_EPS)

# used when a sweep configuration lists no schedule
DEFAULT_SCHEDULES = {
    ExperimentKind.SLMC_BVP: (Schedule.HILBERT, Schedule.TYPE_P, Schedule.DIM_DEP_EPS),
    ExperimentKind.MOMENT2_BVP: (Schedule.HILBERT, Schedule.TYPE_P, Schedule.DIM_DEP_EPS),
    ExperimentKind.SLMC_FA: (Schedule.MINKOWSKI,),
    ExperimentKind.MLMC_FA: (Schedule.MINKOWSKI,),
    ExperimentKind.MOMENT2_FA: (Schedule.MINKOWSKI,),
}


@dataclass
class ModelConfig:
    p: float = 1.5
    q: float = 2.0
    eta: float | None = None
    eta_rule: EtaRule = EtaRule.SHARP
    pairs: list[list[float]] = field(default_factory=list)
    representation: Representation = Representation.CELL_AVERAGE
    mesh: MeshKind = MeshKind.UNIFORM


@dataclass
class ScheduleConfig:
    schedules: list[Schedule] = field(default_factory=list)
    tolerances: list[float] = field(default_factory=list)
    sample_sizes: list[int] = field(default_factory=list)
    level_min: int = 1
    fit_levels: list[int] = field(default_factory=lambda: [3, 4, 5, 6, 7])
    plan_only: bool = False
    compare_fixed_r: bool = False


@dataclass
class ReplicationConfig:
    K: int = 30
    q_outer: float | None = None
    chunk_size: int = 2048


@dataclass
class QuadratureConfig:
    nodes_per_cell: int = 8
    cells_per_piece: int = 1
    max_doublings: int = 0
    geometric_depth: int = GEOMETRIC_DEPTH
    tensor_cells: int = 32
    tensor_nodes: int = 4
    skip_axis_cells: bool = True
    reference_level: int = 8
    epsabs: float = 1e-13
    epsrel: float = 1e-10


@dataclass
class InjectiveConfig:
    dual_basis: DualBasis = DualBasis.CELL
    restarts: int = 8
    max_it: int = 200
    tol: float = 1e-10
    instances: int = 5
    dims: list[int] = field(default_factory=lambda: [3, 4, 5, 16])
    bruteforce: bool = True


@dataclass
class RateConfig:
    """Rate constants of the planners; `fit` replaces alpha, C_alpha, b0, b1 by fitted values."""

    alpha: float | None = None
    C_alpha: float | None = None
    gamma: float = 1.0
    C_gamma: float = 1.0
    b0: float | None = None
    b1: float | None = None
    C_beta: float = 1.0
    C_stab: float = 1.0
    A: float = 2.0
    fit: bool = False
    strong_samples: int = 200
    strong_exponents: list[float] = field(default_factory=lambda: [1.5, 1.75, 2.0])
    constant_mode: ConstantMode = ConstantMode.RATES_ONLY


SECTIONS = {
    "model": ModelConfig,
    "schedule": ScheduleConfig,
    "replication": ReplicationConfig,
    "quadrature": QuadratureConfig,
    "injective": InjectiveConfig,
    "rates": RateConfig,
}


@dataclass
class ExperimentConfig:
    """Configuration of one experiment run."""

    experiment: ExperimentKind = ExperimentKind.INJECTIVE_NORM
    seed: int = 0
    threads: int = 1
    out: str = ""
    logging_level: str = "INFO"
    paper_scale: bool = False
    record_timing: bool = True
    model: ModelConfig = field(default_factory=ModelConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    replication: ReplicationConfig = field(default_factory=ReplicationConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    injective: InjectiveConfig = field(default_factory=InjectiveConfig)
    rates: RateConfig = field(default_factory=RateConfig)

    def __post_init__(self):
        logger.remove()
        logger.add(sys.stderr, level=self.logging_level, format="{level} - {message}")
        self._coerce()
        self.validate()

    def _coerce(self) -> None:
        self.experiment = _enum(ExperimentKind, self.experiment, "experiment")
        self.model.eta_rule = _enum(EtaRule, self.model.eta_rule, "model.eta_rule")
        self.model.representation = _enum(
            Representation, self.model.representation, "model.representation"
        )
        self.model.mesh = _enum(MeshKind, self.model.mesh, "model.mesh")
        self.schedule.schedules = [
            _enum(Schedule, s, "schedule.schedules") for s in self.schedule.schedules
        ]
        if not self.schedule.schedules:
            self.schedule.schedules = list(DEFAULT_SCHEDULES.get(self.experiment, ()))
        self.injective.dual_basis = _enum(
            DualBasis, self.injective.dual_basis, "injective.dual_basis"
        )
        self.rates.constant_mode = _enum(
            ConstantMode, self.rates.constant_mode, "rates.constant_mode"
        )

    @property
    def q_outer(self) -> float:
        """Outer exponent: 2 for the boundary value problem, q for function approximation."""
        if self.replication.q_outer is not None:
            return self.replication.q_outer
        if self.experiment in (
            ExperimentKind.RATES_TABLE1,
            ExperimentKind.SLMC_BVP,
            ExperimentKind.MOMENT2_BVP,
        ):
            return 2.0
        return self.model.q

    def validate(self) -> None:
        if self.seed < 0:
            raise ConfigError(f"must be non-negative, got {self.seed}", "seed")
        if self.threads < 1:
            raise ConfigError(f"must be >= 1, got {self.threads}", "threads")
        if self.replication.K < 1:
            raise ConfigError(f"must be >= 1, got {self.replication.K}", "replication.K")
        if self.replication.q_outer is not None and self.replication.q_outer < 1:
            raise ConfigError("must be >= 1", "replication.q_outer")
        if self.replication.chunk_size < 1:
            raise ConfigError("must be >= 1", "replication.chunk_size")
        self._validate_schedule()
        self._validate_model()

    def _validate_schedule(self) -> None:
        schedule = self.schedule
        tolerances = schedule.tolerances
        if any(not 0.0 < eps <= 0.5 for eps in tolerances):
            raise ConfigError("every tolerance must lie in (0, 1/2]", "schedule.tolerances")
        if any(b >= a for a, b in zip(tolerances, tolerances[1:])):
            raise ConfigError("tolerances must be strictly decreasing", "schedule.tolerances")
        if any(m < 1 for m in schedule.sample_sizes) or sorted(schedule.sample_sizes) != list(
            schedule.sample_sizes
        ):
            raise ConfigError("sample sizes must be positive and increasing", "schedule.sample_sizes")
        if schedule.level_min < 1:
            raise ConfigError("must be >= 1", "schedule.level_min")
        if self.rates.A != 2.0:
            raise ConfigError("level meshes are dyadic, A must be 2", "rates.A")

        kind = self.experiment
        if kind in RATES_EXPERIMENTS:
            if len(schedule.sample_sizes) < 2:
                raise ConfigError("a rate fit needs at least two sample sizes", "schedule.sample_sizes")
            if not self.model.pairs:
                raise ConfigError("rate tables need a list of [p, q] pairs", "model.pairs")
        elif kind != ExperimentKind.INJECTIVE_NORM and not tolerances:
            raise ConfigError("sweeps need at least one tolerance", "schedule.tolerances")

        allowed = {
            ExperimentKind.SLMC_BVP: SLMC_SCHEDULES,
            ExperimentKind.MOMENT2_BVP: SLMC_SCHEDULES,
            ExperimentKind.SLMC_FA: (Schedule.MINKOWSKI, Schedule.HILBERT),
            ExperimentKind.MLMC_FA: (Schedule.MINKOWSKI,),
            ExperimentKind.MOMENT2_FA: (Schedule.MINKOWSKI,),
        }.get(kind)
        if allowed is not None:
            for label in schedule.schedules:
                if label not in allowed:
                    raise ConfigError(
                        f"schedule {label.value} does not apply to {kind.value}",
                        "schedule.schedules",
                    )

    def _validate_model(self) -> None:
        # local import: models depend on the spaces and sampling packages only
        from banachmc.modules.models import BvpModel, FaModel

        kind = self.experiment
        if kind == ExperimentKind.INJECTIVE_NORM:
            if any(n < 1 for n in self.injective.dims):
                raise ConfigError("dimensions must be positive", "injective.dims")
            if not 1.0 < self.model.p < float("inf"):
                raise ConfigError(f"the dual exponent must lie in (1, inf), got {self.model.p}", "model.p")
            return
        pairs = self.model.pairs if kind in RATES_EXPERIMENTS else [[self.model.p, self.model.q]]
        for pair in pairs:
            if len(pair) != 2:
                raise ConfigError(f"expected [p, q], got {pair}", "model.pairs")
            p, q = pair
            try:
                if kind in (ExperimentKind.RATES_TABLE1, ExperimentKind.SLMC_BVP, ExperimentKind.MOMENT2_BVP):
                    BvpModel(p, self.model.eta)
                else:
                    model = FaModel(p, q, self.model.eta, self.model.eta_rule)
                    if kind in (ExperimentKind.RATES_TABLE4, ExperimentKind.MOMENT2_FA):
                        model.check_second_moment()
            except ValueError as err:
                field_name = "model.pairs" if kind in RATES_EXPERIMENTS else "model.p"
                raise ConfigError(str(err), field_name) from err

    def to_dict(self) -> dict[str, Any]:
        return _plain(dataclasses.asdict(self))

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.blake2b(payload.encode("utf-8"), digest_size=16).hexdigest()


def _enum(enum_type, value, field_name: str):
    try:
        return enum_type(value)
    except ValueError as err:
        raise ConfigError(f"unknown value {value!r}", field_name) from err


def _plain(value):
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if hasattr(value, "value") and not isinstance(value, (int, float)):
        return value.value
    if isinstance(value, str):
        return str(value)
    return value


def _section(name: str, raw: Any):
    section_type = SECTIONS[name]
    if not isinstance(raw, dict):
        raise ConfigError("expected a JSON object", name)
    known = {f.name for f in dataclasses.fields(section_type)}
    for key in raw:
        if key not in known:
            raise ConfigError("unknown key", f"{name}.{key}")
    return section_type(**raw)


def merge_overrides(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_overrides(merged[key], value)
        else:
            merged[key] = value
    return merged


def config_from_dict(raw: dict[str, Any], paper_scale: bool = False) -> ExperimentConfig:
    raw = dict(raw)
    overrides = raw.pop("paper_scale_overrides", {})
    if paper_scale or raw.get("paper_scale", False):
        raw = merge_overrides(raw, overrides)
        raw["paper_scale"] = True
    top_level = {f.name for f in dataclasses.fields(ExperimentConfig)} - set(SECTIONS)
    kwargs = {}
    for key, value in raw.items():
        if key in SECTIONS:
            kwargs[key] = _section(key, value)
        elif key in top_level:
            kwargs[key] = value
        else:
            raise ConfigError("unknown key", key)
    if "experiment" not in kwargs:
        raise ConfigError("missing", "experiment")
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as err:
        raise ConfigError(str(err), "experiment") from err


def load_raw_config(name_or_path: BaseExperiment | str) -> dict[str, Any]:
    """JSON object of a built-in configuration (`BaseExperiment`, with or without
    the .json suffix) or of a file path."""
    builtin = None
    for candidate in (name_or_path, f"{name_or_path}.json"):
        try:
            builtin = BaseExperiment(candidate)
            break
        except ValueError:
            continue
    if builtin is not None:
        text = resources.files("banachmc.configs").joinpath(builtin.value).read_text()
    else:
        path = Path(name_or_path)
        if not path.is_file():
            raise ConfigError(f"no such file: {path}", "config")
        text = path.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON ({err.msg} at line {err.lineno})", "config") from err
    if not isinstance(raw, dict):
        raise ConfigError("expected a JSON object", "config")
    return raw


def load_experiment_config(
    name_or_path: BaseExperiment | str, paper_scale: bool = False
) -> ExperimentConfig:
    return config_from_dict(load_raw_config(name_or_path), paper_scale)
