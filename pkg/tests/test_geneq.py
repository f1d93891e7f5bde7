"""Tests for generalized equations, displacement and the grid solver."""
import numpy as np
import pytest

from varistab.catalog import build_instance
from varistab.errors import ContractViolation
from varistab.geneq import (
    BaseFn,
    FieldFn,
    GenEqProblem,
    displacement,
    displacement_lsc_check,
    graph_displacement,
    solve_on_grid,
)
from varistab.metric_core import Box, Singleton


class TestGenEqProblem:
    """Tests for problem construction."""

    def test_reference_value_is_computed(self, affine):
        """Test that ȳ = f(p̄, x̄)."""
        assert affine.y_ref.tolist() == [0.0]

    def test_rejects_non_solution(self):
        """Test that x̄ must solve the equation at p̄."""
        with pytest.raises(ContractViolation):
            GenEqProblem(
                name='shifted',
                base=BaseFn(lambda p, x: x - p, 1, 1, 1),
                field=FieldFn.constant(Singleton([0.0]), 1),
                p_ref=[0.0],
                x_ref=[0.5],
                p_region=Box.interval(-1, 1),
                x_region=Box.interval(-1, 1),
            )

    def test_rejects_reference_outside_region(self):
        """Test that p̄ must lie in the parameter region."""
        with pytest.raises(ContractViolation):
            GenEqProblem(
                name='outside',
                base=BaseFn(lambda p, x: x - p, 1, 1, 1),
                field=FieldFn.constant(Singleton([0.0]), 1),
                p_ref=[2.0],
                x_ref=[2.0],
                p_region=Box.interval(-1, 1),
                x_region=Box.interval(-3, 3),
            )

    def test_region_radius(self, affine):
        """Test the largest ball around x̄ inside the x-region."""
        assert affine.region_radius == pytest.approx(2.0)


class TestDisplacement:
    """Tests for ψ and the graph displacement."""

    def test_affine_displacement(self, affine):
        """Test ψ(p, x) = |x - p|."""
        assert displacement(affine, [0.3], [0.0]) == pytest.approx(0.3)
        assert displacement(affine, [0.3], [0.3]) == pytest.approx(0.0)

    def test_sqrt_epigraph_displacement(self, sqrt_epigraph):
        """Test ψ(p, 0) = √|p| for x ∈ [√|p|, ∞)."""
        assert displacement(sqrt_epigraph, [0.25], [0.0]) == pytest.approx(0.5)

    def test_graph_displacement_off_graph(self, halfline_jump):
        """Test that a point off the graph of F(p̄,·) gives +inf."""
        assert graph_displacement(halfline_jump, [0.0], [-1.0]) == float('inf')

    def test_graph_displacement_on_graph(self, halfline_jump):
        """Test d(f(p̄,x), y) on the graph."""
        assert graph_displacement(halfline_jump, [0.0], [0.5]) == pytest.approx(0.5)


class TestSolveOnGrid:
    """Tests for the brute-force solver."""

    def test_affine_solution(self, affine):
        """Test that the only grid solution of x = 0.3 is 0.3."""
        sample = solve_on_grid(affine, [0.3])

        assert sample.points.tolist() == [[0.3]]
        assert sample.nearest(np.array([0.0])).tolist() == [0.3]

    def test_off_grid_parameter_has_no_solution(self, affine):
        """Test that p between grid points finds nothing."""
        sample = solve_on_grid(affine, [0.305])

        assert len(sample) == 0
        assert sample.nearest(np.array([0.0])) is None

    def test_region_must_be_inside(self, affine):
        """Test that the solve region is checked against the x-region."""
        with pytest.raises(ContractViolation):
            solve_on_grid(affine, [0.0], region=Box.interval(-3, 3))

    def test_threads_give_same_result(self, halfline_jump):
        """Test that workers do not change the solution sample."""
        single = solve_on_grid(halfline_jump, [0.5], resolution=0.05)
        threaded = solve_on_grid(halfline_jump, [0.5], resolution=0.05, workers=4)

        np.testing.assert_array_equal(single.points, threaded.points)
        assert single.points[-1].tolist() == [0.0]


class TestLscCheck:
    """Tests for the lower semicontinuity probe of ψ(p,·)."""

    def test_continuous_displacement(self, affine, schedule):
        """Test that a continuous ψ passes."""
        check = displacement_lsc_check(affine, [0.2], [0.0], schedule)

        assert check.holds is True

    def test_jump_in_field(self, schedule):
        """Test that ψ jumping up at x = 0 is caught with margin about -2."""
        prob = build_instance('halfline_jump_swapped')
        check = displacement_lsc_check(prob, [0.0], [0.0], schedule)

        assert check.holds is False
        assert check.margin == pytest.approx(-2.0, abs=1e-6)
        assert check.witness is not None


class TestJacobian:
    """Tests for the finite-difference Jacobian check."""

    def test_declared_jacobian_matches(self):
        """Test the smooth member in two dimensions."""
        prob = build_instance('smooth_family', member=1)

        assert prob.base.check_jacobian([0.1], [0.2, -0.3]) < 1e-4

    def test_wrong_jacobian_is_visible(self):
        """Test that a wrong Jacobian leaves a large residual."""
        base = BaseFn(lambda p, x: 3 * x, 1, 1, 1, jacobian_x=lambda p, x: np.eye(1))

        assert base.check_jacobian([0.0], [0.0]) > 1.0
