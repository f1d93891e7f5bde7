"""Whitelisted arithmetic expressions in p and x for inline instances."""
import ast
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from varistab.errors import ConfigError

MAX_DEGREE = 4
FUNCTIONS = {
    'abs': abs,
    'sqrtabs': lambda v: float(np.sqrt(abs(v))),
    'min': min,
    'max': max,
}
VARIABLE = re.compile(r'^(p|x)(\d*)$')

Evaluator = Callable[[np.ndarray, np.ndarray], float]


@dataclass(frozen=True)
class Expression:
    """A parsed expression; call it with parameter and point vectors."""

    text: str
    degree: int
    variables: frozenset
    evaluate: Evaluator

    def __call__(self, p: np.ndarray, x: np.ndarray) -> float:
        return float(self.evaluate(p, x))

    @property
    def constant(self) -> bool:
        return not self.variables

    def check_dims(self, dim_p: int, dim_x: int, field: str = '') -> None:
        """Raise ConfigError when a variable index exceeds the declared dimensions."""
        for name in self.variables:
            kind, index = _variable(name)
            limit = dim_p if kind == 'p' else dim_x
            if index >= limit:
                raise ConfigError(f"variable {name} exceeds dim {kind.upper()} = {limit}", field)


def _variable(name: str) -> tuple[str, int]:
    match = VARIABLE.match(name)
    kind, digits = match.group(1), match.group(2)
    return kind, (int(digits) - 1 if digits else 0)


def _constant_value(node: ast.AST) -> float:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        value = _constant_value(node.operand)
        return -value if isinstance(node.op, ast.USub) else value
    raise ConfigError("expected a numeric constant")


class _Compiler:
    """Turns a whitelisted syntax tree into a closure and its polynomial degree."""

    def __init__(self, field: str) -> None:
        self.field = field
        self.variables: set[str] = set()

    def fail(self, message: str) -> ConfigError:
        return ConfigError(message, self.field)

    def compile(self, node: ast.AST) -> tuple[Evaluator, int]:
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise self.fail(f"unsupported constant {node.value!r}")
            value = float(node.value)
            return (lambda p, x: value), 0
        if isinstance(node, ast.Name):
            return self._name(node.id)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner, degree = self.compile(node.operand)
            if isinstance(node.op, ast.USub):
                return (lambda p, x: -inner(p, x)), degree
            return inner, degree
        if isinstance(node, ast.BinOp):
            return self._binop(node)
        if isinstance(node, ast.Call):
            return self._call(node)
        raise self.fail(f"unsupported syntax {type(node).__name__}")

    def _name(self, name: str) -> tuple[Evaluator, int]:
        if name == 'inf':
            return (lambda p, x: float('inf')), 0
        if not VARIABLE.match(name) or name.endswith('0'):
            raise self.fail(f"unknown name {name!r}")
        self.variables.add(name)
        kind, index = _variable(name)
        if kind == 'p':
            return (lambda p, x: float(p[index])), 1
        return (lambda p, x: float(x[index])), 1

    def _binop(self, node: ast.BinOp) -> tuple[Evaluator, int]:
        left, left_degree = self.compile(node.left)
        if isinstance(node.op, ast.Pow):
            exponent = _constant_value(node.right)
            if exponent != int(exponent) or not 0 <= exponent <= MAX_DEGREE:
                raise self.fail(f"exponents must be integers in [0, {MAX_DEGREE}], got {exponent}")
            power = int(exponent)
            return (lambda p, x: left(p, x) ** power), left_degree * power
        right, right_degree = self.compile(node.right)
        if isinstance(node.op, ast.Add):
            return (lambda p, x: left(p, x) + right(p, x)), max(left_degree, right_degree)
        if isinstance(node.op, ast.Sub):
            return (lambda p, x: left(p, x) - right(p, x)), max(left_degree, right_degree)
        if isinstance(node.op, ast.Mult):
            return (lambda p, x: left(p, x) * right(p, x)), left_degree + right_degree
        if isinstance(node.op, ast.Div):
            divisor = _constant_value(node.right)
            if divisor == 0:
                raise self.fail("division by zero")
            return (lambda p, x: left(p, x) / divisor), left_degree
        raise self.fail(f"unsupported operator {type(node.op).__name__}")

    def _call(self, node: ast.Call) -> tuple[Evaluator, int]:
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS or node.keywords:
            raise self.fail("only abs, sqrtabs, min and max may be called")
        name = node.func.id
        if name in ('abs', 'sqrtabs') and len(node.args) != 1:
            raise self.fail(f"{name} takes one argument")
        if name in ('min', 'max') and len(node.args) < 2:
            raise self.fail(f"{name} takes at least two arguments")
        compiled = [self.compile(arg) for arg in node.args]
        fn = FUNCTIONS[name]
        degree = max(d for _, d in compiled)
        if len(compiled) == 1:
            (arg, _), = compiled
            return (lambda p, x: fn(arg(p, x))), degree
        parts = [c for c, _ in compiled]
        return (lambda p, x: fn(part(p, x) for part in parts)), degree


def parse_expression(text, field: str = '') -> Expression:
    """
    Parse an expression over p, x, p1.., x1.. with + - * / ** (or ^), abs,
    sqrtabs, min, max and inf.

    Division is by constants only and exponents are integers up to 4; the
    polynomial degree of the whole expression may not exceed 4. Nothing is
    evaluated while parsing.

    Raises:
        ConfigError: on any syntax outside the whitelist
    """
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        value = float(text)
        return Expression(str(text), 0, frozenset(), lambda p, x: value)
    if not isinstance(text, str):
        raise ConfigError(f"expression must be a string or number, got {type(text).__name__}", field)
    try:
        tree = ast.parse(text.replace('^', '**'), mode='eval')
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}", field)
    compiler = _Compiler(field)
    evaluate, degree = compiler.compile(tree.body)
    if degree > MAX_DEGREE:
        raise ConfigError(f"expression {text!r} has degree {degree} > {MAX_DEGREE}", field)
    return Expression(text, degree, frozenset(compiler.variables), evaluate)
