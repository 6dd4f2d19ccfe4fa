"""Traffic distributions, phase KS distances and critical values."""

from shiftcore.distribution import (
    NUM_PHASES,
    PHASES,
    PMF_TOLERANCE,
    PhaseCounts,
    TrafficDistribution,
    normalize,
    validate_phase,
)
from shiftcore.ks import (
    KsReport,
    cdf_ks_distance,
    cumulative_difference,
    effective_sample_size,
    ks_critical_value,
    ks_p_value,
    ks_test,
    phase_ks_distance,
)

__all__ = [
    "NUM_PHASES",
    "PHASES",
    "PMF_TOLERANCE",
    "PhaseCounts",
    "TrafficDistribution",
    "normalize",
    "validate_phase",
    "KsReport",
    "cdf_ks_distance",
    "cumulative_difference",
    "effective_sample_size",
    "ks_critical_value",
    "ks_p_value",
    "ks_test",
    "phase_ks_distance",
]
