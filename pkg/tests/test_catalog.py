"""Tests for the instance catalog and inline definitions."""
import pytest

from varistab.catalog import BUILTINS, build_inline, build_instance, catalog_summaries, parse_field
from varistab.errors import ConfigError, ContractViolation
from varistab.geneq import displacement
from varistab.metric_core import dist_to_set
from varistab.optstab import ParamOptProblem


def _affine_spec(**overrides):
    spec = {
        'name': 'inline_affine',
        'base': ['x - p'],
        'field': {'type': 'singleton', 'point': [0]},
        'p_ref': [0.0],
        'x_ref': [0.0],
        'p_region': [[-1.0, 1.0]],
        'x_region': [[-2.0, 2.0]],
    }
    spec.update(overrides)
    return spec


class TestBuildInstance:
    """Tests for named instances."""

    def test_builtins_are_listed(self):
        """Test that the summary lists the seven built-in instances in order."""
        names = [name for name, _ in catalog_summaries()]

        assert names == ['sqrt_epigraph', 'halfline_jump', 'bilinear_field', 'affine_tracking',
                         'smooth_family', 'quad_box', 'linear_halfline']

    def test_options_select_variants(self):
        assert build_instance('smooth_family', member=1).name == 'smooth_family[1]'
        assert build_instance('linear_halfline', slope=1.0).name == 'linear_halfline[1]'

    def test_optimization_instance_type(self, quad_box):
        assert isinstance(quad_box, ParamOptProblem)

    def test_unknown_instance(self):
        with pytest.raises(ConfigError) as excinfo:
            build_instance('no_such_instance')

        assert excinfo.value.field == 'instance'

    def test_unexpected_option(self):
        """Test that options a builder does not take are configuration errors."""
        with pytest.raises(ConfigError):
            build_instance('quad_box', member=1)

    def test_member_out_of_range(self):
        with pytest.raises(ContractViolation):
            build_instance('smooth_family', member=5)

    def test_exact_map(self):
        """Test the closed form Φ(p) = [√|p|, ∞)."""
        values = BUILTINS['sqrt_epigraph'].exact()([0.25])

        assert dist_to_set([0.0], values) == pytest.approx(0.5)


class TestBuildInline:
    """Tests for inline generalized equations."""

    def test_affine(self):
        prob = build_inline(_affine_spec())

        assert prob.name == 'inline_affine'
        assert prob.base.null is False
        assert displacement(prob, [0.3], [0.0]) == pytest.approx(0.3)

    def test_null_base_is_detected(self):
        """Test that a constant zero base marks the problem as null-base."""
        prob = build_inline(_affine_spec(
            base=[0],
            field={'type': 'box', 'lower': ['abs(x) + p'], 'upper': ['inf']},
        ))

        assert prob.base.null is True
        assert displacement(prob, [0.0], [0.5]) == pytest.approx(0.5)

    def test_union_field(self):
        """Test a constant union [0, ∞) ∪ {-1}."""
        prob = build_inline(_affine_spec(
            base=['x'],
            field={'type': 'union', 'members': [
                {'type': 'box', 'lower': [0], 'upper': ['inf']},
                {'type': 'singleton', 'point': [-1]},
            ]},
        ))

        assert displacement(prob, [0.0], [-0.5]) == pytest.approx(0.5)

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            build_inline(_affine_spec(base=['x - p', 'x']))

    def test_reference_must_solve(self):
        """Test that a non-solution x̄ surfaces as a configuration error."""
        with pytest.raises(ConfigError):
            build_inline(_affine_spec(x_ref=[0.5]))

    def test_bad_region(self):
        with pytest.raises(ConfigError):
            build_inline(_affine_spec(p_region=[[1.0, -1.0]]))


class TestParseField:
    """Tests for field descriptions."""

    def test_unknown_type(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_field({'type': 'ellipsoid'}, 1, 1)

        assert excinfo.value.field == 'instance.field.type'

    def test_missing_type(self):
        with pytest.raises(ConfigError):
            parse_field({'point': [0]}, 1, 1)

    def test_constant_detection(self):
        """Test that fields depending on p or x are not constant."""
        assert parse_field({'type': 'abs_at_least', 'radius': 1}, 1, 1).constant is True
        assert parse_field({'type': 'abs_at_least', 'radius': 'p * x'}, 1, 1).constant is False

    def test_product_dimension(self):
        field = parse_field({'type': 'product', 'factors': [
            {'type': 'singleton', 'point': [0]},
            {'type': 'box', 'lower': [0, 0], 'upper': [1, 1]},
        ]}, 1, 1)

        assert field.dim == 3
