"""
scenario/models.py

Vehicle-level scenarios and their JSON file format.

Runtime objects are frozen dataclasses; the file boundary is validated with
pydantic models, the same split the HTTP layer uses for requests.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from errors import ParseError
from shiftcore import PhaseCounts, TrafficDistribution, normalize, validate_phase

logger = logging.getLogger(__name__)

DEFAULT_DURATION_S: float = 3600.0


# ---------------------------------------------------------------------------
# Runtime types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Vehicle:
    """One vehicle: the movement (phase) it uses and when it should depart."""
    id: int
    phase: int
    scheduled_depart_s: float


@dataclass(frozen=True)
class Scenario:
    """
    A time period characterized by a particular vehicle flow.

    Fields
    ------
    label : str
        Human-readable name, e.g. the hour or the grid cell.
    duration_s : float
        Period length; every scheduled departure lies in [0, duration_s).
    vehicles : tuple of Vehicle
        Sorted by scheduled departure time.
    seed : int
        Seed that produced the departure times.
    target_ks : float, optional
        Nominal KS level requested when the scenario came from a sweep.
    """
    label: str
    duration_s: float
    vehicles: Tuple[Vehicle, ...]
    seed: int
    target_ks: Optional[float] = field(default=None)

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ValueError(f"duration_s must be > 0, got {self.duration_s}")
        vehicles = tuple(self.vehicles)
        for v in vehicles:
            validate_phase(v.phase)
            if not 0.0 <= v.scheduled_depart_s < self.duration_s:
                raise ValueError(
                    f"Vehicle {v.id} departs at {v.scheduled_depart_s}, outside [0, {self.duration_s})"
                )
        departures = [v.scheduled_depart_s for v in vehicles]
        if any(a > b for a, b in zip(departures, departures[1:])):
            raise ValueError("Scenario vehicles must be sorted by scheduled_depart_s")
        object.__setattr__(self, "vehicles", vehicles)

    @property
    def total(self) -> int:
        return len(self.vehicles)

    def phase_counts(self) -> PhaseCounts:
        return PhaseCounts.from_phases(v.phase for v in self.vehicles)

    def distribution(self) -> TrafficDistribution:
        return normalize(self.phase_counts())


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------

class VehicleEntry(BaseModel):
    """One vehicle in the scenario JSON file."""
    id: int
    phase: int
    depart_s: float = Field(..., ge=0)

    @field_validator('phase')
    @classmethod
    def validate_phase_number(cls, v):
        if not 1 <= v <= 8:
            raise ValueError(f"phase must be in 1..8, got {v}")
        return v


class ScenarioDocument(BaseModel):
    """Scenario JSON schema: label, duration_s, seed, vehicles[]."""
    label: str
    duration_s: float = Field(..., gt=0)
    seed: int
    vehicles: List[VehicleEntry]
    target_ks: Optional[float] = None

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> "ScenarioDocument":
        return cls(
            label=scenario.label,
            duration_s=scenario.duration_s,
            seed=scenario.seed,
            vehicles=[
                VehicleEntry(id=v.id, phase=v.phase, depart_s=v.scheduled_depart_s)
                for v in scenario.vehicles
            ],
            target_ks=scenario.target_ks,
        )

    def to_scenario(self) -> Scenario:
        vehicles = sorted(
            (Vehicle(id=e.id, phase=e.phase, scheduled_depart_s=e.depart_s) for e in self.vehicles),
            key=lambda v: (v.scheduled_depart_s, v.id),
        )
        return Scenario(
            label=self.label,
            duration_s=self.duration_s,
            vehicles=tuple(vehicles),
            seed=self.seed,
            target_ks=self.target_ks,
        )


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> Path:
    """Write a scenario as JSON; returns the path written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = ScenarioDocument.from_scenario(scenario)
    payload = document.model_dump(exclude_none=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=1)
        f.write("\n")
    logger.info(f"Wrote scenario '{scenario.label}' ({scenario.total} vehicles) to {path}")
    return path


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a scenario JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
        return ScenarioDocument(**raw).to_scenario()
    except (json.JSONDecodeError, ValidationError, TypeError, ValueError) as e:
        raise ParseError(f"Invalid scenario file {path}: {e}") from e
