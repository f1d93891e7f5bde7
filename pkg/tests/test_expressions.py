"""Tests for the inline expression parser."""
import numpy as np
import pytest

from varistab.errors import ConfigError
from varistab.expressions import parse_expression

P = np.array([0.5, -4.0])
X = np.array([1.0, 3.0])


class TestParseExpression:
    """Tests for parsing and evaluating whitelisted expressions."""

    def test_difference(self):
        expression = parse_expression('x - p')

        assert expression(P, X) == pytest.approx(0.5)
        assert expression.degree == 1
        assert expression.variables == frozenset({'x', 'p'})

    def test_indexed_variables(self):
        """Test that x2 and p2 address the second coordinates."""
        assert parse_expression('x2 + p2')(P, X) == pytest.approx(-1.0)

    def test_caret_is_power(self):
        expression = parse_expression('x2^2 - 1')

        assert expression(P, X) == pytest.approx(8.0)
        assert expression.degree == 2

    def test_functions(self):
        """Test abs, sqrtabs, min and max."""
        assert parse_expression('abs(p2)')(P, X) == pytest.approx(4.0)
        assert parse_expression('sqrtabs(p2)')(P, X) == pytest.approx(2.0)
        assert parse_expression('min(x, x2, p)')(P, X) == pytest.approx(0.5)
        assert parse_expression('max(x, x2)')(P, X) == pytest.approx(3.0)

    def test_division_by_constant(self):
        assert parse_expression('x2 / 2')(P, X) == pytest.approx(1.5)

    def test_infinity(self):
        assert parse_expression('inf')(P, X) == float('inf')

    def test_numbers_are_constants(self):
        """Test that JSON numbers parse as constant expressions."""
        expression = parse_expression(3)

        assert expression.constant is True
        assert expression(P, X) == 3.0


class TestRejectedExpressions:
    """Tests for syntax outside the whitelist."""

    @pytest.mark.parametrize('text', [
        'x^5',
        'x*x*x*x*x',
        'x / p',
        'x / 0',
        'y + 1',
        'x0',
        "__import__('os')",
        'x.real',
        'x +',
        'x if p else 1',
        'abs(x, p)',
        'max(x)',
    ])
    def test_rejected(self, text):
        """Test that unsupported input raises ConfigError."""
        with pytest.raises(ConfigError):
            parse_expression(text)

    def test_boolean_is_not_a_number(self):
        with pytest.raises(ConfigError):
            parse_expression(True)

    def test_field_is_reported(self):
        """Test that errors carry the configuration field."""
        with pytest.raises(ConfigError) as excinfo:
            parse_expression('y', 'instance.base[0]')

        assert excinfo.value.field == 'instance.base[0]'
        assert 'instance.base[0]' in str(excinfo.value)

    def test_dimension_check(self):
        """Test that x2 is refused when dim X is 1."""
        expression = parse_expression('x2')

        with pytest.raises(ConfigError):
            expression.check_dims(dim_p=1, dim_x=1)
