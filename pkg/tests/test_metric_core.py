"""Tests for closed sets, distances, grids and samplers."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varistab.catalog import halfline_jump_values
from varistab.errors import BudgetExceeded, ContractViolation, NoProjection
from varistab.metric_core import (
    AbsAtLeast,
    Box,
    CartesianProduct,
    FiniteCloud,
    HalfspaceIntersection,
    MetricSpec,
    Singleton,
    as_vector,
    ball_points,
    box_grid,
    dist_to_set,
    excess,
    lipschitz_residual,
    project_to_set,
    sample_set,
    sweep,
)

coordinate = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False, allow_infinity=False)


class TestMetricSpec:
    """Tests for the sum metric on products."""

    def test_sum_of_block_norms(self):
        """Test that the distance adds the Euclidean norms of each block."""
        metric = MetricSpec((1, 2))

        assert metric.distance([0, 0, 0], [3, 4, 0]) == pytest.approx(7.0)

    def test_dual_norm_is_largest_block(self):
        """Test the dual of the sum metric."""
        assert MetricSpec((1, 2)).dual_norm(np.array([3.0, 4.0, 0.0])) == pytest.approx(4.0)

    def test_rejects_empty_blocks(self):
        """Test that zero-width blocks are refused."""
        with pytest.raises(ContractViolation):
            MetricSpec((1, 0))


class TestDistances:
    """Tests for exact distances and projections."""

    def test_box_distance(self):
        """Test distance to a box from outside."""
        assert dist_to_set([2.0, 0.5], Box([0, 0], [1, 1])) == pytest.approx(1.0)

    def test_union_distance(self):
        """Test that a union takes the nearest member."""
        values = halfline_jump_values(np.array([1.0]))

        assert dist_to_set([-0.5], values) == pytest.approx(0.5)
        assert dist_to_set([-3.0], values) == pytest.approx(0.0)

    def test_empty_box(self):
        """Test that an empty box is infinitely far and cannot be projected on."""
        empty = Box([1.0], [0.0])

        assert dist_to_set([0.0], empty) == float('inf')
        with pytest.raises(NoProjection):
            project_to_set([0.0], empty)

    def test_dimension_mismatch(self):
        """Test that a point of the wrong dimension is rejected."""
        with pytest.raises(ContractViolation):
            dist_to_set([0.0, 0.0], Box.interval(0, 1))

    def test_halfspace_projection(self):
        """Test projection onto the negative quadrant."""
        quadrant = HalfspaceIntersection([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])

        assert project_to_set([1.0, 1.0], quadrant) == pytest.approx([0.0, 0.0], abs=1e-6)
        assert dist_to_set([1.0, 1.0], quadrant) == pytest.approx(np.sqrt(2), abs=1e-6)

    def test_infeasible_halfspaces(self):
        """Test that x <= -1 and x >= 1 together are empty."""
        empty = HalfspaceIntersection([[1.0], [-1.0]], [-1.0, -1.0])

        assert empty.is_empty()
        assert dist_to_set([0.0], empty) == float('inf')

    def test_abs_at_least(self):
        """Test the set |y| >= 1."""
        ring = AbsAtLeast(1.0)

        assert dist_to_set([0.25], ring) == pytest.approx(0.75)
        assert project_to_set([0.25], ring) == pytest.approx([1.0])
        assert project_to_set([-0.25], ring) == pytest.approx([-1.0])

    def test_product_uses_sum_metric(self):
        """Test that product distances add across factors."""
        product = CartesianProduct((Singleton([0.0]), Singleton([0.0, 0.0])))

        assert dist_to_set([3.0, 4.0, 0.0], product) == pytest.approx(7.0)

    def test_as_vector_rejects_nan(self):
        """Test that non-finite coordinates are refused."""
        with pytest.raises(ContractViolation):
            as_vector([0.0, float('nan')])


class TestGrids:
    """Tests for grids, set samples and excess."""

    def test_box_grid_order(self):
        """Test a 3x3 grid in lexicographic order."""
        grid = box_grid(Box([0, 0], [1, 1]), 0.5)

        assert grid.shape == (9, 2)
        assert grid[0].tolist() == [0.0, 0.0]
        assert grid[1].tolist() == [0.0, 0.5]
        assert grid[-1].tolist() == [1.0, 1.0]

    def test_box_grid_budget(self):
        """Test that an oversized grid raises."""
        with pytest.raises(BudgetExceeded) as excinfo:
            box_grid(Box.interval(0, 1), 0.01, budget=10)

        assert excinfo.value.points == 101

    def test_box_grid_needs_finite_bounds(self):
        """Test that an unbounded region cannot be gridded."""
        with pytest.raises(ContractViolation):
            box_grid(Box.whole(1), 0.1)

    def test_sample_set_projects_and_dedups(self):
        """Test sampling [0, ∞) inside [-1, 1]."""
        points = sample_set(Box([0.0], [np.inf]), 0.5, Box.interval(-1, 1))

        assert points[:, 0].tolist() == [0.0, 0.5, 1.0]

    def test_excess(self):
        """Test the one-sided excess of [0, 2] over [0, 1]."""
        assert excess(Box.interval(0, 2), Box.interval(0, 1), step=0.5) == pytest.approx(1.0)
        assert excess(Box.interval(0, 1), Box.interval(0, 2), step=0.5) == pytest.approx(0.0)

    def test_excess_of_empty_set(self):
        """Test that an empty set has zero excess."""
        assert excess(FiniteCloud.empty(1), Box.interval(0, 1)) == 0.0


class TestNormalGenerators:
    """Tests for Fréchet normal cone generators."""

    def test_box_lower_face(self):
        """Test the outward normal at a lower bound."""
        box = Box.interval(0, 1)

        assert box.normal_generators(np.array([0.0])).tolist() == [[-1.0]]
        assert box.normal_generators(np.array([0.5])).shape == (0, 1)

    def test_whole_space(self):
        """Test that the whole space has the zero normal cone."""
        assert Box.whole(2).normal_generators(np.zeros(2)).shape == (0, 2)

    def test_union_intersects_active_members(self):
        """Test that the two halflines meeting at 0 give the zero cone."""
        assert AbsAtLeast(0.0).normal_generators(np.array([0.0])).shape == (0, 1)

    def test_union_single_active_member(self):
        """Test the normal at the boundary point 1 of |y| >= 1."""
        assert AbsAtLeast(1.0).normal_generators(np.array([1.0])).tolist() == [[-1.0]]


class TestSampling:
    """Tests for seeded samplers and sweeps."""

    def test_ball_points_deterministic(self):
        """Test that a seed reproduces the same points."""
        first = ball_points(np.zeros(2), 0.5, 64, seed=3)
        second = ball_points(np.zeros(2), 0.5, 64, seed=3)

        np.testing.assert_array_equal(first, second)

    def test_ball_points_exclude_center(self):
        """Test that points lie in the ball but never at its center."""
        points = ball_points(np.array([1.0]), 0.1, 64, seed=0)
        gaps = np.abs(points[:, 0] - 1.0)

        assert np.all(gaps > 0)
        assert np.all(gaps <= 0.1 + 1e-12)

    @given(st.lists(st.integers(min_value=-100, max_value=100), max_size=30))
    def test_sweep_keeps_order(self, items):
        """Test that threaded sweeps return results in input order."""
        assert sweep(lambda v: v * v, items, workers=4) == [v * v for v in items]


class TestDistanceProperties:
    """Property tests for the distance evaluators."""

    @settings(max_examples=50, deadline=None)
    @given(coordinate, coordinate, coordinate, coordinate)
    def test_box_distance_is_1_lipschitz(self, a, b, c, d):
        """Test |dist(y1,S) - dist(y2,S)| <= d(y1,y2) for a box."""
        box = Box([-1.0, -1.0], [1.0, 1.0])

        assert lipschitz_residual(box, [a, b], [c, d]) <= 1e-9

    @settings(max_examples=50, deadline=None)
    @given(coordinate)
    def test_union_distance_is_1_lipschitz(self, a):
        """Test the Lipschitz property against a fixed point for a union."""
        values = halfline_jump_values(np.array([0.5]))

        assert lipschitz_residual(values, [a], [0.3]) <= 1e-9

    @settings(max_examples=50, deadline=None)
    @given(coordinate, coordinate)
    def test_projection_lands_in_set(self, a, b):
        """Test that projections onto a halfspace are members."""
        halfspace = HalfspaceIntersection([[1.0, 1.0]], [1.0])
        point = project_to_set([a, b], halfspace)

        assert halfspace.contains(point, tol=1e-9)
        assert dist_to_set([a, b], halfspace) == pytest.approx(np.linalg.norm(point - np.array([a, b])), abs=1e-9)
