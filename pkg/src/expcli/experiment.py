"""
expcli/experiment.py

ExperimentSpec - validated description of one sweep.

Kinds
-----
real_scenarios            every hour of the turn-count file, as counted
fixed_volume_sweep        training volume, perturbed distributions per KS level
fixed_distribution_sweep  training distribution, one scenario per volume
grid                      every (KS level, volume) pair
"""

from enum import Enum
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config import ShiftbenchConfig, SimulatorConfig, TrainConfig
from errors import ConfigError
from scenario import PerturbationMode

SAMPLE_TURN_COUNTS = Path(__file__).resolve().parents[2] / "data" / "sample_turn_counts_synthetic.csv"


class ExperimentKind(str, Enum):
    REAL_SCENARIOS = "real_scenarios"
    FIXED_VOLUME_SWEEP = "fixed_volume_sweep"
    FIXED_DISTRIBUTION_SWEEP = "fixed_distribution_sweep"
    GRID = "grid"


class ExperimentSpec(BaseModel):
    """
    Fields
    ------
    ks_levels, volumes
        Sweep axes. The fixed-volume sweep uses the training volume when
        `volumes` is empty; the fixed-distribution sweep always adds the
        training volume to `volumes`.
    training_label
        Turn-count hour the agent trains on; the earliest hour when unset.
    checkpoint
        Trained network to evaluate. When unset or missing, the agent is
        trained with `agent` and the checkpoint is written to `out_dir`.
    """
    model_config = ConfigDict(use_enum_values=False)

    kind: ExperimentKind
    ks_levels: List[float] = Field(default_factory=list)
    volumes: List[int] = Field(default_factory=list)
    seeds: List[int] = Field(default_factory=lambda: [0])
    mode: PerturbationMode = PerturbationMode.SPREAD
    turn_counts: Path = SAMPLE_TURN_COUNTS
    training_label: Optional[str] = None
    checkpoint: Optional[Path] = None
    policy: str = "dqn"
    duration_s: float = Field(default=3600.0, gt=0)
    workers: int = Field(default=4, ge=1)
    out_dir: Path = Path("results")
    agent: TrainConfig = Field(default_factory=TrainConfig)
    simulator: SimulatorConfig = Field(default_factory=SimulatorConfig)

    @field_validator('ks_levels')
    @classmethod
    def validate_levels(cls, v):
        for level in v:
            if not 0.0 <= level <= 1.0:
                raise ValueError(f"KS level {level} outside [0, 1]")
        return v

    @field_validator('volumes')
    @classmethod
    def validate_volumes(cls, v):
        for volume in v:
            if volume < 1:
                raise ValueError(f"Volume {volume} must be >= 1")
        return v

    @field_validator('policy')
    @classmethod
    def validate_policy(cls, v):
        if v not in ("dqn", "fixed_time", "random"):
            raise ValueError(f"Unknown policy '{v}'")
        return v

    @model_validator(mode='after')
    def validate_sweep(self):
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        kind = self.kind
        if kind is ExperimentKind.GRID and (not self.ks_levels or not self.volumes):
            raise ValueError("grid experiments need both ks_levels and volumes")
        if kind is ExperimentKind.FIXED_VOLUME_SWEEP and not self.ks_levels:
            raise ValueError("fixed_volume_sweep needs ks_levels")
        if kind is ExperimentKind.FIXED_DISTRIBUTION_SWEEP and not self.volumes:
            raise ValueError("fixed_distribution_sweep needs volumes")
        return self

    @classmethod
    def create(cls, **fields) -> "ExperimentSpec":
        """Construct and validate, reporting problems as ConfigError."""
        try:
            return cls(**fields)
        except ValidationError as e:
            raise ConfigError(f"Invalid experiment specification: {e}") from e

    @classmethod
    def from_config(cls, config: ShiftbenchConfig, kind: ExperimentKind, **overrides) -> "ExperimentSpec":
        """Fill the sweep axes for `kind` from the experiment defaults."""
        exp = config.experiment
        axes = {
            ExperimentKind.REAL_SCENARIOS: ([], []),
            ExperimentKind.FIXED_VOLUME_SWEEP: (exp.fixed_volume_ks_levels, []),
            ExperimentKind.FIXED_DISTRIBUTION_SWEEP: ([], exp.fixed_distribution_volumes),
            ExperimentKind.GRID: (exp.grid_ks_levels, exp.grid_volumes),
        }[kind]
        fields = dict(
            kind=kind,
            ks_levels=list(axes[0]),
            volumes=list(axes[1]),
            seeds=list(exp.seeds),
            mode=PerturbationMode(exp.mode),
            training_label=exp.training_label,
            duration_s=exp.duration_s,
            workers=exp.workers,
            out_dir=Path(exp.out_dir),
            agent=config.agent,
            simulator=config.simulator,
        )
        if exp.turn_counts:
            fields["turn_counts"] = Path(exp.turn_counts)
        fields.update({k: v for k, v in overrides.items() if v is not None})
        return cls.create(**fields)
