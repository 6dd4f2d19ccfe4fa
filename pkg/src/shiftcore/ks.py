"""
shiftcore/ks.py

Kolmogorov-Smirnov style distances between traffic distributions, the
asymptotic critical value K(alpha, n), and the cumulative-difference
diagnostic used to show how non-linear the KS distance is.

All functions are pure and safe to call from any thread.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import kolmogorov

from errors import InvalidAlpha
from shiftcore.distribution import TrafficDistribution


@dataclass(frozen=True)
class KsReport:
    """Outcome of a KS significance test between two traffic distributions."""
    distance: float
    critical_value: float
    reject_null: bool
    alpha: float
    n_effective: int
    p_value: float


def phase_ks_distance(p_a: TrafficDistribution, p_b: TrafficDistribution) -> float:
    """Phase KS distance: max over phases of |p_A(i) - p_B(i)|."""
    return float(np.max(np.abs(p_a.as_array() - p_b.as_array())))


def cdf_ks_distance(p_a: TrafficDistribution, p_b: TrafficDistribution) -> float:
    """Classical KS statistic over the categorical CDFs in NEMA order."""
    return float(np.max(np.abs(p_a.cdf() - p_b.cdf())))


def cumulative_difference(p_train: TrafficDistribution, p_test: TrafficDistribution) -> float:
    """L1 distance between two pmfs; lies in [0, 2]."""
    return float(np.sum(np.abs(p_train.as_array() - p_test.as_array())))


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha!r}")


def _check_n(n: int) -> None:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")


def ks_critical_value(alpha: float, n: int) -> float:
    """
    Asymptotic critical value K(alpha, n) = sqrt(-ln(alpha / 2) / (2 n)).

    Raises
    ------
    InvalidAlpha
        If alpha is outside (0, 1).
    """
    _check_alpha(alpha)
    _check_n(n)
    return math.sqrt(-math.log(alpha / 2.0) / (2.0 * n))


def ks_p_value(distance: float, n: int) -> float:
    """Asymptotic p-value of a KS distance from the Kolmogorov distribution."""
    _check_n(n)
    return float(kolmogorov(math.sqrt(n) * distance))


def effective_sample_size(n_a: int, n_b: int) -> int:
    """Two-sample effective size n_a * n_b / (n_a + n_b), floored at 1."""
    _check_n(n_a)
    _check_n(n_b)
    return max(1, (n_a * n_b) // (n_a + n_b))


def ks_test(
    p_a: TrafficDistribution,
    p_b: TrafficDistribution,
    alpha: float,
    n: int,
) -> KsReport:
    """
    Test the null hypothesis that two traffic distributions are identical.

    The null is rejected when the phase KS distance strictly exceeds
    K(alpha, n).
    """
    critical = ks_critical_value(alpha, n)
    distance = phase_ks_distance(p_a, p_b)
    return KsReport(
        distance=distance,
        critical_value=critical,
        reject_null=distance > critical,
        alpha=alpha,
        n_effective=int(n),
        p_value=ks_p_value(distance, n),
    )
