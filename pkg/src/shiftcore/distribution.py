"""
shiftcore/distribution.py

Traffic distributions over the 8 NEMA phases.

A traffic distribution is the 8-categorical pmf of vehicle counts per phase:

    p(i) = N_i / n,   n = sum_i N_i

Phases are always ordered by NEMA index 1..8; that canonical order is what
makes a CDF over the categorical support well defined.
"""

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Tuple

import numpy as np

from errors import InvalidDistribution, ZeroTotal


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

NUM_PHASES: int = 8
PHASES: Tuple[int, ...] = tuple(range(1, NUM_PHASES + 1))

PMF_TOLERANCE: float = 1e-12
"""Absolute tolerance on sum(p) == 1 (eight doubles summed)."""


def validate_phase(phase: int) -> int:
    """Return phase unchanged if it is a NEMA phase number, else raise."""
    if isinstance(phase, bool) or int(phase) != phase or not 1 <= phase <= NUM_PHASES:
        raise InvalidDistribution(f"Phase {phase!r} is not a NEMA phase in 1..{NUM_PHASES}")
    return int(phase)


# ---------------------------------------------------------------------------
# Data structures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseCounts:
    """
    Vehicles per phase over one scenario period.

    Fields
    ------
    counts : tuple of 8 ints
        N_i for phases 1..8, all non-negative.
    """
    counts: Tuple[int, ...]

    def __post_init__(self) -> None:
        values = tuple(int(c) for c in self.counts)
        if len(values) != NUM_PHASES:
            raise InvalidDistribution(f"Expected {NUM_PHASES} phase counts, got {len(values)}")
        if any(c < 0 for c in values):
            raise InvalidDistribution(f"Phase counts must be non-negative: {values}")
        object.__setattr__(self, "counts", values)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def __getitem__(self, phase: int) -> int:
        return self.counts[validate_phase(phase) - 1]

    @classmethod
    def from_mapping(cls, by_phase: Mapping[int, int]) -> "PhaseCounts":
        """Build from {phase: count}; absent phases count zero."""
        for phase in by_phase:
            validate_phase(phase)
        return cls(tuple(int(by_phase.get(p, 0)) for p in PHASES))

    @classmethod
    def from_phases(cls, phases: Iterable[int]) -> "PhaseCounts":
        """Tally a sequence of per-vehicle phase numbers."""
        tally = [0] * NUM_PHASES
        for phase in phases:
            tally[validate_phase(phase) - 1] += 1
        return cls(tuple(tally))

    def scaled(self, k: int) -> "PhaseCounts":
        return PhaseCounts(tuple(c * k for c in self.counts))


@dataclass(frozen=True)
class TrafficDistribution:
    """
    Normalized distribution of vehicles across the 8 NEMA phases.

    Immutable; construction validates p(i) in [0, 1] and sum(p) == 1 within
    PMF_TOLERANCE.
    """
    p: Tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.p)
        if len(values) != NUM_PHASES:
            raise InvalidDistribution(f"Expected {NUM_PHASES} probabilities, got {len(values)}")
        if not all(np.isfinite(values)):
            raise InvalidDistribution(f"Probabilities must be finite: {values}")
        if any(v < 0.0 or v > 1.0 for v in values):
            raise InvalidDistribution(f"Probabilities must lie in [0, 1]: {values}")
        total = sum(values)
        if abs(total - 1.0) > PMF_TOLERANCE:
            raise InvalidDistribution(f"Probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "p", values)

    def __getitem__(self, phase: int) -> float:
        return self.p[validate_phase(phase) - 1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.p, dtype=float)

    def cdf(self) -> np.ndarray:
        """Cumulative sums in NEMA index order 1..8."""
        return np.cumsum(self.as_array())

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "TrafficDistribution":
        """
        Build from a float vector produced by arithmetic on another pmf.

        Entries within PMF_TOLERANCE of 0 or 1 are snapped onto the interval
        so round-off from perturbation arithmetic does not fail validation.
        """
        arr = np.asarray(values, dtype=float)
        if arr.shape != (NUM_PHASES,):
            raise InvalidDistribution(f"Expected shape ({NUM_PHASES},), got {arr.shape}")
        if np.any(arr < -PMF_TOLERANCE) or np.any(arr > 1.0 + PMF_TOLERANCE):
            raise InvalidDistribution(f"Probabilities outside [0, 1]: {arr.tolist()}")
        return cls(tuple(np.clip(arr, 0.0, 1.0).tolist()))

    @classmethod
    def uniform(cls) -> "TrafficDistribution":
        return cls(tuple([1.0 / NUM_PHASES] * NUM_PHASES))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def normalize(counts: PhaseCounts) -> TrafficDistribution:
    """
    Turn phase counts into a traffic distribution, p(i) = N_i / n.

    Raises
    ------
    ZeroTotal
        If no vehicles were counted.
    """
    n = counts.total
    if n == 0:
        raise ZeroTotal("Cannot normalize phase counts with total 0")
    return TrafficDistribution(tuple(c / n for c in counts.counts))
