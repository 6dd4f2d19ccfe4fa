"""
tests/test_shiftcore.py

Tests for traffic distributions and KS distances.

Covers:
  1. PhaseCounts / TrafficDistribution validation
  2. normalize (ZeroTotal, scale invariance)
  3. Phase KS distance against a brute-force loop and the metric axioms
  4. Critical value, p-value and the KS test decision
  5. Cumulative difference and CDF distance
"""

import math

import numpy as np
import pytest

from errors import InvalidAlpha, InvalidDistribution, ZeroTotal
from shiftcore import (
    NUM_PHASES,
    PhaseCounts,
    TrafficDistribution,
    cdf_ks_distance,
    cumulative_difference,
    effective_sample_size,
    ks_critical_value,
    ks_p_value,
    ks_test,
    normalize,
    phase_ks_distance,
)


def make_distribution(rng: np.random.Generator) -> TrafficDistribution:
    """Random pmf from random integer counts."""
    counts = rng.integers(0, 500, size=NUM_PHASES)
    counts[rng.integers(NUM_PHASES)] += 1
    return normalize(PhaseCounts(tuple(int(c) for c in counts)))


TRAIN_COUNTS = PhaseCounts((210, 1150, 180, 420, 230, 1080, 270, 438))


# ============================================================================
# DISTRIBUTION TESTS
# ============================================================================

class TestDistribution:
    """PhaseCounts and TrafficDistribution construction."""

    def test_normalize_sums_to_one(self):
        """normalize gives p(i) = N_i / n."""
        p = normalize(TRAIN_COUNTS)
        assert p[2] == pytest.approx(1150 / 3978)
        assert sum(p.p) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("k", [1, 2, 7, 1000])
    def test_normalize_scale_invariant(self, k):
        """Scaling every count by k leaves the distribution unchanged."""
        rng = np.random.default_rng(k)
        for _ in range(50):
            counts = PhaseCounts(tuple(int(c) for c in rng.integers(1, 2000, size=NUM_PHASES)))
            np.testing.assert_allclose(
                normalize(counts.scaled(k)).as_array(), normalize(counts).as_array(), rtol=0, atol=1e-15
            )

    def test_normalize_zero_total_raises(self):
        """An empty hour cannot be normalized."""
        with pytest.raises(ZeroTotal):
            normalize(PhaseCounts((0,) * NUM_PHASES))

    def test_counts_reject_negative(self):
        """Negative counts are invalid."""
        with pytest.raises(InvalidDistribution):
            PhaseCounts((1, 2, 3, 4, 5, 6, 7, -1))

    def test_counts_reject_wrong_length(self):
        """Exactly 8 phases are required."""
        with pytest.raises(InvalidDistribution):
            PhaseCounts((1, 2, 3))

    def test_distribution_rejects_bad_sum(self):
        """A pmf must sum to one."""
        with pytest.raises(InvalidDistribution):
            TrafficDistribution((0.2,) * NUM_PHASES)

    def test_from_mapping_zero_fills(self):
        """Absent phases count zero."""
        counts = PhaseCounts.from_mapping({2: 10, 6: 5})
        assert counts.counts == (0, 10, 0, 0, 0, 5, 0, 0)
        assert counts.total == 15

    def test_cdf_in_nema_order(self):
        """The CDF accumulates phases 1..8 and ends at 1."""
        p = normalize(PhaseCounts((1, 1, 0, 0, 0, 0, 0, 2)))
        assert p.cdf().tolist() == pytest.approx([0.25, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 1.0])


# ============================================================================
# KS DISTANCE TESTS
# ============================================================================

class TestKsDistance:
    """Phase KS distance properties."""

    def test_matches_brute_force(self):
        """Agrees with an explicit loop over phases on random pmfs."""
        rng = np.random.default_rng(7)
        for _ in range(10_000):
            a, b = make_distribution(rng), make_distribution(rng)
            expected = max(abs(a.p[i] - b.p[i]) for i in range(NUM_PHASES))
            assert phase_ks_distance(a, b) == expected

    def test_metric_axioms(self):
        """Identity, symmetry, bounds and the triangle inequality."""
        rng = np.random.default_rng(11)
        for _ in range(100):
            a, b, c = make_distribution(rng), make_distribution(rng), make_distribution(rng)
            assert phase_ks_distance(a, a) == 0.0
            assert phase_ks_distance(a, b) == phase_ks_distance(b, a)
            assert 0.0 <= phase_ks_distance(a, b) <= 1.0
            assert phase_ks_distance(a, c) <= phase_ks_distance(a, b) + phase_ks_distance(b, c) + 1e-15

    def test_disjoint_support_is_one(self):
        """All mass on different phases gives distance 1."""
        a = TrafficDistribution((1.0, 0, 0, 0, 0, 0, 0, 0))
        b = TrafficDistribution((0, 0, 0, 0, 0, 0, 0, 1.0))
        assert phase_ks_distance(a, b) == 1.0
        assert cumulative_difference(a, b) == 2.0

    def test_cumulative_difference_bounds(self):
        """Cumulative difference lies between D and 2."""
        rng = np.random.default_rng(3)
        for _ in range(100):
            a, b = make_distribution(rng), make_distribution(rng)
            d = phase_ks_distance(a, b)
            assert d - 1e-15 <= cumulative_difference(a, b) <= 2.0 + 1e-12

    def test_cdf_distance_of_adjacent_swap(self):
        """Moving mass between neighbouring phases shows in the CDF distance."""
        a = TrafficDistribution((0.5, 0.5, 0, 0, 0, 0, 0, 0))
        b = TrafficDistribution((0.4, 0.6, 0, 0, 0, 0, 0, 0))
        assert cdf_ks_distance(a, b) == pytest.approx(0.1)
        assert phase_ks_distance(a, b) == pytest.approx(0.1)


# ============================================================================
# KS TEST TESTS
# ============================================================================

class TestKsTest:
    """Critical value, p-value and the rejection decision."""

    def test_critical_value_formula(self):
        """K(0.05, 100) = sqrt(-ln(0.025) / 200)."""
        assert ks_critical_value(0.05, 100) == pytest.approx(math.sqrt(-math.log(0.025) / 200))
        assert ks_critical_value(0.05, 100) == pytest.approx(0.13581, abs=1e-5)

    def test_critical_value_shrinks_with_n(self):
        """More vehicles give a tighter critical value."""
        assert ks_critical_value(0.05, 4000) < ks_critical_value(0.05, 400)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
    def test_invalid_alpha(self, alpha):
        """alpha outside (0, 1) raises InvalidAlpha."""
        with pytest.raises(InvalidAlpha):
            ks_critical_value(alpha, 100)

    def test_invalid_n(self):
        """n must be a positive integer."""
        with pytest.raises(ValueError):
            ks_critical_value(0.05, 0)

    def test_p_value_extremes(self):
        """Zero distance has p-value 1; a large distance is near 0."""
        assert ks_p_value(0.0, 100) == pytest.approx(1.0)
        assert ks_p_value(0.5, 1000) < 1e-10

    def test_reject_is_strict(self):
        """Null kept for identical pmfs, rejected for a large shift."""
        p = normalize(TRAIN_COUNTS)
        same = ks_test(p, p, 0.05, 3978)
        assert not same.reject_null
        assert same.distance == 0.0

        shifted = normalize(PhaseCounts((1150, 210, 180, 420, 230, 1080, 270, 438)))
        report = ks_test(p, shifted, 0.05, 3978)
        assert report.reject_null
        assert report.critical_value == pytest.approx(ks_critical_value(0.05, 3978))
        assert report.n_effective == 3978

    def test_effective_sample_size(self):
        """n_a n_b / (n_a + n_b), floored at 1."""
        assert effective_sample_size(100, 100) == 50
        assert effective_sample_size(1, 1) == 1


# ============================================================================
# WORKED EXAMPLES
# ============================================================================

class TestWorkedExamples:
    """Hand-computed values."""

    def test_normalize_examples(self):
        """Uniform, single-phase and mixed counts."""
        assert normalize(PhaseCounts((100,) * 8)).p == (0.125,) * 8
        assert normalize(PhaseCounts((3978, 0, 0, 0, 0, 0, 0, 0))).p == (1.0,) + (0.0,) * 7
        assert normalize(PhaseCounts((1, 1, 2, 0, 0, 0, 0, 0))).p == (0.25, 0.25, 0.5) + (0.0,) * 5

    def test_two_phase_shift(self):
        """(0.5, 0.5) vs (0.3, 0.7): D = 0.2, CDF distance 0.2, cumulative 0.4."""
        a = TrafficDistribution((0.5, 0.5, 0, 0, 0, 0, 0, 0))
        b = TrafficDistribution((0.3, 0.7, 0, 0, 0, 0, 0, 0))
        assert phase_ks_distance(a, b) == pytest.approx(0.2)
        assert cdf_ks_distance(a, b) == pytest.approx(0.2)
        assert cumulative_difference(a, b) == pytest.approx(0.4)

    def test_cdf_distance_first_phase(self):
        """Mass on phase 1 vs phase 2 differs by 1 in the CDF."""
        a = TrafficDistribution((1.0, 0, 0, 0, 0, 0, 0, 0))
        b = TrafficDistribution((0, 1.0, 0, 0, 0, 0, 0, 0))
        assert cdf_ks_distance(a, b) == 1.0

    def test_critical_value_scaling(self):
        """Four times the vehicles halves the critical value."""
        assert ks_critical_value(0.05, 400) == pytest.approx(ks_critical_value(0.05, 100) / 2)
        assert ks_critical_value(0.05, 400) == pytest.approx(0.0679, abs=1e-4)

    def test_reject_boundary(self):
        """Distance 1 rejects at n = 100; at n = 400 a shift just under the critical value does not."""
        a = TrafficDistribution((1.0, 0, 0, 0, 0, 0, 0, 0))
        b = TrafficDistribution((0, 0, 0, 0, 0, 0, 0, 1.0))
        assert ks_test(a, b, 0.05, 100).reject_null

        u = TrafficDistribution.uniform()
        critical = ks_critical_value(0.05, 400)
        # the 0.125 donor mass covers a 0.068 shift
        for factor, rejects in ((0.999, False), (1.001, True)):
            d = critical * factor
            shifted = TrafficDistribution.from_array(u.as_array() + np.array([d, -d, 0, 0, 0, 0, 0, 0]))
            assert ks_test(u, shifted, 0.05, 400).reject_null == rejects
