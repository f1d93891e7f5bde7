"""Tests for value functions, problem calmness and the Argmin checks."""
import numpy as np
import pytest

from varistab.catalog import build_instance, linear_halfline
from varistab.errors import ContractViolation, Unsupported
from varistab.geneq import displacement
from varistab.optstab import (
    LocalScope,
    ProblemCalmness,
    argmin_generalized_equation,
    argmin_map,
    check_argmin_liplsc,
    check_value_function_props,
    estimate_kappa,
    feasible_map,
    problem_calmness,
    scalar_calmness,
    value_function,
    value_table,
)
from varistab.stability import Status, Verdict


class TestValueFunction:
    """Tests for valf, locvalf and the Argmin set."""

    def test_interior_minimizer(self, quad_box):
        """Test valf(0.3) = 0.09 attained at the projected point x = 0.3."""
        result = value_function(quad_box, [0.3])

        assert result.value == pytest.approx(0.09)
        assert result.argmin.tolist() == [[0.3]]

    def test_unconstrained_minimizer(self, quad_box):
        """Test that x = 0 is feasible for p = -0.5, so valf is 0."""
        result = value_function(quad_box, [-0.5])

        assert result.value == pytest.approx(0.0)
        assert result.argmin.tolist() == [[0.0]]

    def test_empty_local_scope(self, quad_box):
        """Test that a ball missing R(p) gives +inf."""
        result = value_function(quad_box, [0.5], LocalScope(np.array([-1.0]), 0.1))

        assert result.value == float('inf')
        assert result.feasible is False
        assert result.argmin.shape == (0, 1)

    def test_linear_objective(self):
        assert value_function(linear_halfline(), [0.25]).value == pytest.approx(0.5)

    def test_table(self, quad_box):
        """Test a table over two parameters."""
        table = value_table(quad_box, [[0.3], [-0.5]])

        assert table.p_points == [[0.3], [-0.5]]
        assert table.values == pytest.approx([0.09, 0.0])
        assert table.feasible == [True, True]


class TestMaps:
    """Tests for the Argmin and feasible-set maps."""

    def test_argmin_map(self, quad_box):
        assert argmin_map(quad_box)([0.3]).points.tolist() == [[0.3]]

    def test_feasible_map_uses_formula(self, quad_box):
        """Test R(p) = [p, p + 2]."""
        region = feasible_map(quad_box)([0.3])

        assert region.contains(np.array([2.3]))
        assert not region.contains(np.array([0.2]))

    def test_argmin_equation(self, quad_box):
        """Test that ψ of the constructed equation vanishes exactly on minimizers."""
        ge = argmin_generalized_equation(quad_box)

        assert ge.y_ref.tolist() == [0.0, 0.0]
        assert displacement(ge, [0.3], [0.3]) == pytest.approx(0.0, abs=1e-12)
        assert displacement(ge, [0.3], [0.5]) == pytest.approx(0.16)

    def test_kappa(self, quad_box):
        """Test the sampled x-Lipschitz constant of h = x - p."""
        assert estimate_kappa(quad_box, 0.1) == pytest.approx(1.0)


class TestScalarCalmness:
    """Tests for calmness of scalar functions."""

    def test_absolute_value(self):
        """Test that |p| has quotients exactly 1."""
        result = scalar_calmness(lambda p: abs(p[0]), [0.0])

        assert result.calm is True
        assert result.upper == pytest.approx(1.0)
        assert result.lower == pytest.approx(1.0)

    def test_negative_square_root_below(self):
        """Test that -√|p| is not calm from below."""
        result = scalar_calmness(lambda p: -np.sqrt(abs(p[0])), [0.0], 'below')

        assert result.calm is False
        assert result.lower == float('-inf')
        assert result.diverging_below is True

    def test_unknown_side(self):
        with pytest.raises(ContractViolation):
            scalar_calmness(lambda p: 0.0, [0.0], 'left')

    def test_problem_calmness(self, quad_box):
        """Test that quotients of the local value are never negative for quad_box."""
        result = problem_calmness(quad_box)

        assert result.calm is True
        assert result.infimum >= 0.0


class TestValueFunctionProps:
    """Tests for the value-function propositions."""

    def test_sqrt_objective_p1(self):
        """Test that valf and the problem both fail calmness from below, consistently."""
        report = check_value_function_props(build_instance('sqrt_objective'), 'P1')

        assert report.hypotheses[0].status is Status.FAILS
        assert report.conclusion.status is Status.FAILS
        assert report.consistent is True
        assert report.verdict is Verdict.FAIL

    def test_quad_box_p2(self, quad_box):
        """Test valf calm from above within κ_φ(1 + l) plus slack."""
        report = check_value_function_props(quad_box, 'P2')

        assert report.conclusion.status is Status.HOLDS
        assert report.constants['upper'] <= report.constants['limit']
        assert report.verdict is Verdict.PASS

    def test_p3_conclusion_ignores_problem_calmness(self, monkeypatch):
        """Test that valf(p) = 2p stays calm from below on [p, ∞) whatever problem calmness reports."""
        monkeypatch.setattr('varistab.optstab.problem_calmness',
                            lambda prob, **kwargs: ProblemCalmness(False, float('-inf'), True, {'p': [0.5]}))
        report = check_value_function_props(linear_halfline(), 'P3')

        assert report.constants['problem_calm'] is False
        assert report.conclusion.status is Status.HOLDS
        assert report.constants['lower'] >= report.constants['limit']

    def test_unknown_proposition(self, quad_box):
        with pytest.raises(ContractViolation):
            check_value_function_props(quad_box, 'P9')


class TestArgminLiplsc:
    """Tests for the Argmin Lipschitz lsc criterion."""

    def test_slope_equal_to_kappa_fails(self):
        """Test that |∇φ| = 1 does not exceed κ = 1."""
        report = check_argmin_liplsc(linear_halfline(slope=1.0), 'smooth')
        slope = next(h for h in report.hypotheses if h.id == 'v')

        assert slope.status is Status.FAILS
        assert report.verdict is Verdict.FAIL
        assert report.equation is None

    def test_declared_kappa_is_inflated(self):
        report = check_argmin_liplsc(linear_halfline(slope=1.0), 'smooth')

        assert report.kappa == pytest.approx(1.1)

    def test_subdifferential_needs_descriptor(self):
        """Test that objectives without a descriptor cannot use the subdifferential variant."""
        with pytest.raises(Unsupported):
            check_argmin_liplsc(build_instance('sqrt_objective'), 'subdifferential')

    def test_unknown_variant(self, quad_box):
        with pytest.raises(ContractViolation):
            check_argmin_liplsc(quad_box, 'gradient')
