"""
Configuration loader for shiftbench.

Loads configuration from:
1. Environment variables (highest priority)
2. YAML config file (shiftbench_config.yaml)
3. Model defaults (lowest priority)

Command-line flags are applied on top by the expcli runner.
"""

import os
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from errors import ConfigError


logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class LoggingConfig(BaseModel):
    """Logging configuration."""
    log_level: str = Field(default="INFO", description="Root log level")
    log_format: str = Field(default=LOG_FORMAT, description="logging.basicConfig format")

    @field_validator('log_level')
    @classmethod
    def validate_level(cls, v):
        level = v.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown log level: {v}")
        return level


class SimulatorConfig(BaseModel):
    """Geometry and signal timing of the simulated 4-leg intersection."""
    model_config = ConfigDict(validate_assignment=True)

    yellow_s: int = Field(default=3, description="Yellow interval in seconds")
    all_red_s: int = Field(default=1, description="All-red clearance in seconds")
    min_green_s: int = Field(default=5, description="Minimum green before a switch is allowed")
    startup_lost_s: int = Field(default=2, description="Lost time before a new green discharges")
    saturation_rate: int = Field(default=1, description="Vehicles per second per green phase")
    detection_range_m: float = Field(default=30.0, description="Detector reach back from the stop line")
    stopped_vehicle_spacing_m: float = Field(default=6.0, description="Space taken by one stopped vehicle")
    detection_capacity: int = Field(default=5, description="Vehicles visible per phase; derived from range and spacing when omitted")
    max_approach_vehicles: int = Field(default=50, description="Entry is refused once the lane queue exceeds this")
    timeout_extra_s: int = Field(default=1800, description="Hard timeout past scenario duration")
    elapsed_clip_s: float = Field(default=120.0, description="Elapsed-in-color clip for observations")
    max_wait_s: Optional[int] = Field(
        default=120, description="Red time after which a phase with stopped vehicles must be served next; None disables"
    )
    default_action: Tuple[int, int] = Field(default=(2, 6), description="Initial green pair")
    approach_length_m: float = Field(default=150.0, description="Approach length to the stop line")
    free_speed_mps: float = Field(default=15.0, description="Free-flow speed on the approach")

    @field_validator('yellow_s', 'all_red_s', 'min_green_s', 'saturation_rate',
                     'detection_capacity', 'max_approach_vehicles', 'timeout_extra_s')
    @classmethod
    def validate_positive(cls, v):
        if v < 1:
            raise ValueError("Timing and capacity values must be >= 1")
        return v

    @field_validator('max_wait_s')
    @classmethod
    def validate_max_wait(cls, v):
        if v is not None and v < 1:
            raise ValueError("max_wait_s must be >= 1 or null")
        return v

    @field_validator('startup_lost_s')
    @classmethod
    def validate_startup(cls, v):
        if v < 0:
            raise ValueError("startup_lost_s must be >= 0")
        return v

    @model_validator(mode='before')
    @classmethod
    def derive_detection_capacity(cls, data):
        if isinstance(data, dict) and 'detection_capacity' not in data and (
            'detection_range_m' in data or 'stopped_vehicle_spacing_m' in data
        ):
            reach = float(data.get('detection_range_m', 30.0))
            spacing = float(data.get('stopped_vehicle_spacing_m', 6.0))
            if spacing > 0:
                data = {**data, 'detection_capacity': max(1, int(reach // spacing))}
        return data

    @field_validator('elapsed_clip_s', 'approach_length_m', 'free_speed_mps',
                     'detection_range_m', 'stopped_vehicle_spacing_m')
    @classmethod
    def validate_positive_real(cls, v):
        if v <= 0:
            raise ValueError("Geometry values must be > 0")
        return v

    @field_validator('default_action')
    @classmethod
    def validate_default_action(cls, v):
        from simsignal.phases import COMPATIBLE_PAIRS

        if tuple(v) not in COMPATIBLE_PAIRS:
            raise ValueError(f"default_action {v} is not a compatible phase pair")
        return tuple(v)

    @property
    def free_flow_s(self) -> float:
        """Time to cover the approach at free speed."""
        return self.approach_length_m / self.free_speed_mps

    @property
    def transition_s(self) -> int:
        return self.yellow_s + self.all_red_s


class TrainConfig(BaseModel):
    """DQN training hyperparameters."""
    model_config = ConfigDict(validate_assignment=True)

    gamma: float = Field(default=0.99, description="Discount factor, 0 <= gamma < 1")
    learning_rate: float = Field(default=1e-3, gt=0)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    epsilon_start: float = Field(default=1.0, ge=0, le=1)
    epsilon_end: float = Field(default=0.05, ge=0, le=1)
    epsilon_decay_steps: int = Field(default=50_000, gt=0)
    batch_size: int = Field(default=64, gt=0)
    buffer_capacity: int = Field(default=100_000, gt=0)
    target_sync_interval: int = Field(default=1000, gt=0)
    total_env_steps: int = Field(default=50_000, ge=0)
    learning_starts: int = Field(default=1000, ge=0)
    hidden_sizes: List[int] = Field(default_factory=lambda: [64, 64])
    max_grad_norm: float = Field(default=10.0, gt=0)
    n_training_scenarios: int = Field(default=10, gt=0)
    greedy_eval_interval: int = Field(
        default=1, ge=0, description="Episodes between greedy evaluations; 0 keeps the final network"
    )
    seed: int = 0

    @field_validator('gamma')
    @classmethod
    def validate_gamma(cls, v):
        if not 0.0 <= v < 1.0:
            raise ValueError("gamma must satisfy 0 <= gamma < 1")
        return v

    @field_validator('hidden_sizes')
    @classmethod
    def validate_hidden(cls, v):
        if not v or any(h < 1 for h in v):
            raise ValueError("hidden_sizes must be a non-empty list of positive widths")
        return v

    @model_validator(mode='after')
    def validate_epsilon_schedule(self):
        if self.epsilon_end > self.epsilon_start:
            raise ValueError("epsilon_end must not exceed epsilon_start")
        return self


class ExperimentDefaults(BaseModel):
    """Defaults for sweeps, overridable from the CLI."""
    fixed_volume_ks_levels: List[float] = Field(default_factory=lambda: [0.0, 0.02, 0.04, 0.08, 0.16])
    fixed_distribution_volumes: List[int] = Field(default_factory=lambda: [2000, 3000, 4000, 5000, 6000, 7000])
    grid_ks_levels: List[float] = Field(default_factory=lambda: [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
    grid_volumes: List[int] = Field(default_factory=lambda: list(range(4000, 7001, 250)))
    nonlinearity_levels: List[float] = Field(
        default_factory=lambda: [0.0, 0.02, 0.04, 0.06, 0.08, 0.10, 0.12]
    )
    seeds: List[int] = Field(default_factory=lambda: [0])
    workers: int = Field(default=4, ge=1)
    mode: Literal["concentrated", "spread"] = "spread"
    out_dir: str = "results"
    alarm_threshold: float = Field(default=0.04, gt=0, le=1)
    alpha: float = Field(default=0.05, gt=0, lt=1)
    duration_s: float = Field(default=3600.0, gt=0)
    turn_counts: Optional[str] = Field(default=None, description="Turn-count CSV; sample file when unset")
    training_label: Optional[str] = Field(default=None, description="Training hour label; earliest when unset")


class ServiceConfig(BaseModel):
    """Shift-monitor HTTP service binding."""
    host: str = "0.0.0.0"
    port: int = 8001


class ShiftbenchConfig(BaseModel):
    """Main shiftbench configuration model."""
    model_config = ConfigDict(validate_assignment=True)

    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    simulator: SimulatorConfig = Field(default_factory=SimulatorConfig)
    agent: TrainConfig = Field(default_factory=TrainConfig)
    experiment: ExperimentDefaults = Field(default_factory=ExperimentDefaults)
    service: ServiceConfig = Field(default_factory=ServiceConfig)


class ConfigLoader:
    """
    Loads and manages shiftbench configuration.

    Priority order:
    1. Environment variables (SHIFTBENCH_LOG_LEVEL, SHIFTBENCH_WORKERS, ...)
    2. YAML config file (shiftbench_config.yaml)
    3. Model defaults
    """

    ENV_OVERRIDES: Dict[str, Tuple[str, str, type]] = {
        "SHIFTBENCH_LOG_LEVEL": ("logging", "log_level", str),
        "SHIFTBENCH_WORKERS": ("experiment", "workers", int),
        "SHIFTBENCH_OUT_DIR": ("experiment", "out_dir", str),
        "SHIFTBENCH_SEED": ("agent", "seed", int),
        "SHIFTBENCH_SERVICE_HOST": ("service", "host", str),
        "SHIFTBENCH_SERVICE_PORT": ("service", "port", int),
    }

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize config loader.

        Args:
            config_path: Path to YAML config file. Defaults to ./shiftbench_config.yaml
        """
        self.config_path = config_path or os.getenv(
            "SHIFTBENCH_CONFIG_PATH",
            "./shiftbench_config.yaml"
        )
        self.config: Optional[ShiftbenchConfig] = None
        self._load()

    def _load(self) -> None:
        """Load configuration from all sources."""
        yaml_config = self._load_yaml()
        env_config = self._load_env_overrides(yaml_config)

        try:
            self.config = ShiftbenchConfig(**env_config)
            logger.info(f"Configuration loaded successfully from {self.config_path}")
        except ValidationError as e:
            logger.error(f"Failed to load configuration: {e}")
            raise ConfigError(f"Invalid configuration in {self.config_path}: {e}") from e

    def _load_yaml(self) -> Dict[str, Any]:
        """Load YAML configuration file."""
        config_file = Path(self.config_path)

        if not config_file.exists():
            logger.warning(f"Config file not found at {self.config_path}, using defaults")
            return {}

        try:
            with open(config_file, 'r', encoding='utf-8') as f:
                config = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            logger.error(f"Failed to load YAML config: {e}")
            raise ConfigError(f"Cannot read config file {config_file}: {e}") from e

        if not isinstance(config, dict):
            raise ConfigError(f"Config file {config_file} must contain a mapping")
        logger.info(f"Loaded YAML config from {config_file}")
        return config

    def _load_env_overrides(self, base_config: Dict[str, Any]) -> Dict[str, Any]:
        """Override configuration with environment variables."""
        config = {k: dict(v) if isinstance(v, dict) else v for k, v in base_config.items()}

        for env_var, (section, field, cast) in self.ENV_OVERRIDES.items():
            raw = os.getenv(env_var)
            if not raw:
                continue
            try:
                value = cast(raw)
            except ValueError as e:
                raise ConfigError(f"{env_var}={raw!r} is not a valid {cast.__name__}") from e
            config.setdefault(section, {})[field] = value

        return config

    def get(self) -> ShiftbenchConfig:
        """Get the loaded configuration."""
        if not self.config:
            raise RuntimeError("Configuration not loaded")
        return self.config

    def to_dict(self) -> Dict[str, Any]:
        """Export configuration as dictionary (for logging/debugging)."""
        if not self.config:
            return {}
        return self.config.model_dump()


def setup_logging(config: Optional[ShiftbenchConfig] = None) -> None:
    """
    Set up logging based on configuration.

    Args:
        config: ShiftbenchConfig object. If None, uses defaults.
    """
    settings = config.logging if config else LoggingConfig()

    logging.basicConfig(
        level=getattr(logging, settings.log_level),
        format=settings.log_format,
    )


# Singleton instance
_config_loader: Optional[ConfigLoader] = None


def get_config(config_path: Optional[str] = None) -> ShiftbenchConfig:
    """Get or create the global config loader."""
    global _config_loader
    if _config_loader is None or (config_path and config_path != _config_loader.config_path):
        _config_loader = ConfigLoader(config_path)
    return _config_loader.get()
