"""Tests for the brute-force grid oracle."""
import numpy as np
import pytest

from varistab.catalog import BUILTINS, build_instance
from varistab.errors import ContractViolation
from varistab.metric_core import Box, FiniteCloud, Singleton
from varistab.oracle import (
    EmpiricalEstimate,
    OracleGrid,
    divergence_trace,
    dyadic_points,
    empirical_modulus,
    exact_map,
    solution_map,
    verdict_compare,
)


def _shift_map():
    """Φ(p) = {p}."""
    return exact_map('shift', lambda p: Singleton(p), 1, 1)


def _grid(x_region=None, delta=None):
    return OracleGrid.dyadic([0.0], 0.5, 10, 0.01, x_region or Box.interval(-2, 2), delta)


class TestDivergenceTrace:
    """Tests for the dyadic divergence rule."""

    def test_inverse_square_root_diverges(self):
        """Test that d^(-1/2) grows across scales."""
        distances = [0.5 * 2.0**-k for k in range(10)]
        trace = divergence_trace(distances, [d**-0.5 for d in distances], 0.5)

        assert trace.scales == list(range(10))
        assert trace.diverging is True
        assert trace.growth == pytest.approx(4.0)

    def test_constant_quotients(self):
        """Test that bounded quotients are not diverging."""
        distances = [0.5 * 2.0**-k for k in range(10)]
        trace = divergence_trace(distances, [1.0] * 10, 0.5)

        assert trace.diverging is False

    def test_too_few_scales(self):
        """Test that four scales never show divergence."""
        distances = [0.5 * 2.0**-k for k in range(4)]
        trace = divergence_trace(distances, [d**-1 for d in distances], 0.5)

        assert trace.diverging is False

    def test_infinite_quotient(self):
        """Test that an infinite quotient diverges immediately."""
        trace = divergence_trace([0.5, 0.25], [1.0, float('inf')], 0.5)

        assert trace.diverging is True

    def test_rise_must_be_strict(self):
        """Test that a plateau in the finest transitions breaks divergence."""
        distances = [0.5 * 2.0**-k for k in range(6)]
        trace = divergence_trace(distances, [1.0, 2.0, 3.0, 4.0, 4.0, 5.0], 0.5)

        assert trace.diverging is False


class TestDyadicPoints:
    """Tests for dyadic parameter points."""

    def test_points_coarsest_first(self):
        points = dyadic_points([0.0, 0.0], 0.5, 2)

        assert points.tolist() == [[0.5, 0.0], [-0.5, 0.0], [0.0, 0.5], [0.0, -0.5],
                                   [0.25, 0.0], [-0.25, 0.0], [0.0, 0.25], [0.0, -0.25]]


class TestEmpiricalModulus:
    """Tests for empirical moduli."""

    def test_shift_map_liplsc(self):
        """Test that Φ(p) = {p} has Lipschitz lsc modulus 1."""
        estimate = empirical_modulus(_shift_map(), 'liplsc', [0.0], [0.0], _grid())

        assert estimate.value == pytest.approx(1.0)
        assert estimate.diverging is False
        assert len(estimate.p_points) == 20

    def test_shift_map_aubin(self):
        """Test the Aubin modulus of Φ(p) = {p}."""
        estimate = empirical_modulus(_shift_map(), 'aubin', [0.0], [0.0], _grid(delta=1.0))

        assert estimate.value == pytest.approx(1.0)

    def test_sqrt_epigraph_not_liplsc(self):
        """Test that √|p| / |p| is flagged as diverging."""
        mapping = BUILTINS['sqrt_epigraph'].exact()
        estimate = empirical_modulus(mapping, 'liplsc', [0.0], [0.0], _grid())

        assert estimate.diverging is True
        assert estimate.value == float('inf')

    def test_halfline_jump_calm(self):
        """Test that localization hides the far branch, so the calm modulus is 0."""
        mapping = BUILTINS['halfline_jump'].exact()
        estimate = empirical_modulus(mapping, 'calm', [0.0], [0.0], _grid(delta=0.5))

        assert estimate.value == pytest.approx(0.0)
        assert estimate.diverging is False

    def test_halfline_jump_not_upper_lipschitz(self):
        """Test that without localization the branch at -1 makes the quotient blow up."""
        mapping = BUILTINS['halfline_jump'].exact()
        estimate = empirical_modulus(mapping, 'upper_lipschitz', [0.0], [0.0], _grid(delta=0.5))

        assert estimate.diverging is True
        assert estimate.delta is None

    def test_calm_needs_reference_set(self):
        """Test that calmness is undefined when Φ(p̄) is empty."""
        mapping = exact_map('void', lambda p: FiniteCloud.empty(1) if p[0] == 0 else Singleton(p), 1, 1)

        with pytest.raises(ContractViolation):
            empirical_modulus(mapping, 'calm', [0.0], [0.0], _grid(delta=0.5))

    def test_unknown_kind(self):
        with pytest.raises(ContractViolation):
            empirical_modulus(_shift_map(), 'hoelder', [0.0], [0.0], _grid())

    def test_solution_map_matches_grid(self, affine):
        """Test that the sampled solution map at grid-aligned p is {p}."""
        mapping = solution_map(affine)

        assert mapping([0.2]).points.tolist() == [[0.2]]
        assert mapping([0.305]).is_empty()

    def test_threads_give_same_value(self):
        """Test that workers do not change the estimate."""
        single = empirical_modulus(_shift_map(), 'liplsc', [0.0], [0.0], _grid())
        threaded = empirical_modulus(_shift_map(), 'liplsc', [0.0], [0.0], _grid(), workers=4)

        assert threaded.value == single.value
        assert threaded.quotients == single.quotients


class TestVerdictCompare:
    """Tests for bound comparisons."""

    def test_within_slack(self):
        """Test that the threshold is bound·(1 + slack) plus one grid spacing."""
        comparison = verdict_compare(1.0, EmpiricalEstimate('calm', 1.04, False, x_step=0.01))

        assert comparison.threshold == pytest.approx(1.06)
        assert comparison.verdict == 'Pass'

    def test_exceeds_bound(self):
        comparison = verdict_compare(1.0, EmpiricalEstimate('calm', 1.2, False, x_step=0.01))

        assert comparison.passed is False
        assert comparison.verdict == 'Fail'

    def test_infinite_bound(self):
        """Test that an infinite bound accepts any value."""
        comparison = verdict_compare(float('inf'), EmpiricalEstimate('calm', 1e6, False, x_step=0.01))

        assert comparison.passed is True
