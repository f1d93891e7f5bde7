"""Built-in instances and the inline instance builder used by the command line."""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union as TypingUnion

import numpy as np

from config import Config
from varistab.errors import ConfigError, ContractViolation
from varistab.expressions import Expression, parse_expression
from varistab.geneq import BaseFn, FieldFn, GenEqProblem, polyhedral_graph
from varistab.metric_core import (
    AbsAtLeast,
    Box,
    CartesianProduct,
    ClosedSet,
    HalfspaceIntersection,
    Singleton,
    Union,
)
from varistab.oracle import SetValuedMap, exact_map
from varistab.optstab import ParamOptProblem
from varistab.slopes_dual import SmoothFunction

logger = logging.getLogger(__name__)

Instance = TypingUnion[GenEqProblem, ParamOptProblem]


def _interval(low: float, high: float) -> Box:
    return Box.interval(low, high)


def _whole_line_times(values: ClosedSet) -> ClosedSet:
    return CartesianProduct((Box.whole(1), values))


# Φ(p) = [√|p|, ∞)
def sqrt_epigraph_values(p: np.ndarray) -> ClosedSet:
    return Box([np.sqrt(abs(p[0]))], [np.inf])


# Φ(0) = [0, ∞), Φ(p) = (-∞, -1] ∪ {0} otherwise
def halfline_jump_values(p: np.ndarray) -> ClosedSet:
    if p[0] == 0:
        return _interval(0.0, np.inf)
    return Union((_interval(-np.inf, -1.0), Singleton([0.0])))


def sqrt_epigraph() -> GenEqProblem:
    """x ∈ [√|p|, ∞) written as f = x, F(p,x) = [√|p|, ∞)."""
    return GenEqProblem(
        name='sqrt_epigraph',
        base=BaseFn(lambda p, x: x.copy(), 1, 1, 1, jacobian_x=lambda p, x: np.eye(1)),
        field=FieldFn(lambda p, x: sqrt_epigraph_values(p), 1,
                      polyhedral_graph(lambda p: _whole_line_times(sqrt_epigraph_values(p)))),
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-2.0, 2.0),
    )


def halfline_jump() -> GenEqProblem:
    return GenEqProblem(
        name='halfline_jump',
        base=BaseFn(lambda p, x: x.copy(), 1, 1, 1, jacobian_x=lambda p, x: np.eye(1)),
        field=FieldFn(lambda p, x: halfline_jump_values(p), 1,
                      polyhedral_graph(lambda p: _whole_line_times(halfline_jump_values(p)))),
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-2.0, 2.0),
    )


def _abs_cone_graph(p: np.ndarray) -> ClosedSet:
    """Graph of x ↦ {y : |y| >= |p x|}."""
    slope = abs(float(p[0]))
    if slope == 0:
        return Box.whole(2)
    upper = HalfspaceIntersection([[slope, -1.0], [-slope, -1.0]], [0.0, 0.0])
    lower = HalfspaceIntersection([[slope, 1.0], [-slope, 1.0]], [0.0, 0.0])
    return Union((upper, lower))


def bilinear_field() -> GenEqProblem:
    """Null base with F(p,x) = {y : |y| >= |p x|}; calm at (0, 0) with modulus 0."""
    return GenEqProblem(
        name='bilinear_field',
        base=BaseFn.zero(1, 1, 1),
        field=FieldFn(lambda p, x: AbsAtLeast(abs(float(p[0] * x[0]))), 1, polyhedral_graph(_abs_cone_graph)),
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-2.0, 2.0),
    )


def affine_tracking() -> GenEqProblem:
    return GenEqProblem(
        name='affine_tracking',
        base=BaseFn(lambda p, x: x - p, 1, 1, 1, jacobian_x=lambda p, x: np.eye(1)),
        field=FieldFn.constant(Singleton([0.0]), 1),
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-2.0, 2.0),
    )


def smooth_family(member: int = 0) -> GenEqProblem:
    """
    Smooth bases with F ≡ {0}.

    member 0: x + x³/3 - p = 0.
    member 1: (2x₁ + x₂² - p, 3x₂ - p) = 0 in two dimensions.
    """
    if member == 0:
        return GenEqProblem(
            name='smooth_family',
            base=BaseFn(lambda p, x: x + x**3 / 3 - p, 1, 1, 1,
                        jacobian_x=lambda p, x: np.array([[1 + x[0] ** 2]])),
            field=FieldFn.constant(Singleton([0.0]), 1),
            p_ref=[0.0],
            x_ref=[0.0],
            p_region=_interval(-1.0, 1.0),
            x_region=_interval(-2.0, 2.0),
        )
    if member == 1:
        return GenEqProblem(
            name='smooth_family[1]',
            base=BaseFn(lambda p, x: np.array([2 * x[0] + x[1] ** 2 - p[0], 3 * x[1] - p[0]]), 1, 2, 2,
                        jacobian_x=lambda p, x: np.array([[2.0, 2 * x[1]], [0.0, 3.0]])),
            field=FieldFn.constant(Singleton([0.0, 0.0]), 2),
            p_ref=[0.0],
            x_ref=[0.0, 0.0],
            p_region=_interval(-1.0, 1.0),
            x_region=Box([-1.0, -1.0], [1.0, 1.0]),
        )
    raise ContractViolation(f"smooth_family has members 0 and 1, got {member}")


def quad_box() -> ParamOptProblem:
    """min x² subject to x - p ∈ [0, 2]."""
    return ParamOptProblem(
        name='quad_box',
        objective=lambda p, x: float(x[0] ** 2),
        constraint=lambda p, x: x - p,
        constraint_set=_interval(0.0, 2.0),
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-1.5, 3.0),
        kappa=1.0,
        feasible_set=lambda p: Box([p[0]], [p[0] + 2.0]),
        objective_grad_x=lambda p, x: 2 * x,
        constraint_jac_x=lambda p, x: np.eye(1),
        objective_descriptor=lambda p: SmoothFunction(lambda x: float(x[0] ** 2), lambda x: 2 * x, 1),
    )


def linear_halfline(slope: float = 2.0) -> ParamOptProblem:
    """min slope·x subject to x - p >= 0; slope 1 is the negative control for the slope condition."""
    return ParamOptProblem(
        name='linear_halfline' if slope == 2.0 else f'linear_halfline[{slope:g}]',
        objective=lambda p, x: float(slope * x[0]),
        constraint=lambda p, x: x - p,
        constraint_set=_interval(0.0, np.inf),
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-1.0, 2.0),
        kappa=1.0,
        feasible_set=lambda p: Box([p[0]], [np.inf]),
        objective_grad_x=lambda p, x: np.array([slope]),
        constraint_jac_x=lambda p, x: np.eye(1),
        objective_descriptor=lambda p: SmoothFunction(lambda x: float(slope * x[0]), lambda x: np.array([slope]), 1),
    )


# Instances the checks are exercised on besides the listed built-ins.

def vee_field() -> GenEqProblem:
    """Null base, F(p,x) = [|x| + p, ∞); c[F] = 1 and ℓ_F = 1."""
    return GenEqProblem(
        name='vee_field',
        base=BaseFn.zero(1, 1, 1),
        field=FieldFn(lambda p, x: Box([abs(x[0]) + p[0]], [np.inf]), 1,
                      polyhedral_graph(lambda p: HalfspaceIntersection([[1.0, -1.0], [-1.0, -1.0]],
                                                                       [-p[0], -p[0]]))),
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-1.0, 1.0),
    )


def _parabola_graph(sign: float) -> Callable[[np.ndarray, np.ndarray, np.ndarray], ClosedSet]:
    """Tangent model of {(x,y) : sign·(y - p + x²) >= 0} at a graph point."""
    def model(p: np.ndarray, x: np.ndarray, y: np.ndarray) -> ClosedSet:
        gap = sign * (y[0] - p[0] + x[0] ** 2)
        if gap > Config.TOL_FEAS:
            return Box.whole(2)
        # constraint g(x,y) = -sign·(y - p + x²) <= 0 linearized at (x, y)
        normal = np.array([-sign * 2 * x[0], -sign])
        return HalfspaceIntersection([normal], [normal @ np.array([x[0], y[0]])])
    return model


def parabola_up() -> GenEqProblem:
    """Null base, F(p,x) = [p - x², ∞): graph slope 1 but c[F] = 0."""
    return GenEqProblem(
        name='parabola_up',
        base=BaseFn.zero(1, 1, 1),
        field=FieldFn(lambda p, x: Box([p[0] - x[0] ** 2], [np.inf]), 1, _parabola_graph(1.0)),
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-1.0, 1.0),
    )


def parabola_down() -> GenEqProblem:
    """Null base, F(p,x) = (-∞, p - x²]: G(p) = [-√p, √p] and the graph slope degenerates."""
    return GenEqProblem(
        name='parabola_down',
        base=BaseFn.zero(1, 1, 1),
        field=FieldFn(lambda p, x: Box([-np.inf], [p[0] - x[0] ** 2]), 1, _parabola_graph(-1.0)),
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-1.0, 1.0),
    )


def halfline_jump_swapped() -> GenEqProblem:
    """f ≡ -2 with F(p,x) = Φ(x) of halfline_jump; ψ(p̄,·) is not lsc at x = 0."""
    return GenEqProblem(
        name='halfline_jump_swapped',
        base=BaseFn(lambda p, x: np.array([-2.0]), 1, 1, 1, jacobian_x=lambda p, x: np.zeros((1, 1))),
        field=FieldFn(lambda p, x: halfline_jump_values(x), 1),
        p_ref=[0.0],
        x_ref=[0.5],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-0.5, 1.5),
    )


def sqrt_base() -> GenEqProblem:
    """f = x - √|p| with F ≡ {0}; the base perturbation constant diverges."""
    return GenEqProblem(
        name='sqrt_base',
        base=BaseFn(lambda p, x: x - np.sqrt(np.abs(p)), 1, 1, 1, jacobian_x=lambda p, x: np.eye(1)),
        field=FieldFn.constant(Singleton([0.0]), 1),
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-2.0, 2.0),
    )


def cubic_tracking() -> GenEqProblem:
    return GenEqProblem(
        name='cubic_tracking',
        base=BaseFn(lambda p, x: x**3 - p, 1, 1, 1, jacobian_x=lambda p, x: np.array([[3 * x[0] ** 2]])),
        field=FieldFn.constant(Singleton([0.0]), 1),
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-1.0, 1.0),
    )


def half_slope_field() -> GenEqProblem:
    """f = x with F(p,x) = [x/2, ∞); solutions are x >= 0 for every p."""
    return GenEqProblem(
        name='half_slope_field',
        base=BaseFn(lambda p, x: x.copy(), 1, 1, 1, jacobian_x=lambda p, x: np.eye(1)),
        field=FieldFn(lambda p, x: Box([x[0] / 2], [np.inf]), 1,
                      polyhedral_graph(lambda p: HalfspaceIntersection([[0.5, -1.0]], [0.0]))),
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-2.0, 2.0),
    )


def scaled_base(power: int = 1) -> GenEqProblem:
    """f = 2x (power 1) or f = x² (power 2) with F ≡ {0}."""
    if power == 1:
        base = BaseFn(lambda p, x: 2 * x, 1, 1, 1, jacobian_x=lambda p, x: 2 * np.eye(1))
    elif power == 2:
        base = BaseFn(lambda p, x: x**2, 1, 1, 1, jacobian_x=lambda p, x: np.array([[2 * x[0]]]))
    else:
        raise ContractViolation(f"power must be 1 or 2, got {power}")
    return GenEqProblem(
        name='double_base' if power == 1 else 'square_base',
        base=base,
        field=FieldFn.constant(Singleton([0.0]), 1),
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-2.0, 2.0),
    )


def sqrt_objective() -> ParamOptProblem:
    """min -√|p| over the whole line; valf is not calm from below at p = 0."""
    return ParamOptProblem(
        name='sqrt_objective',
        objective=lambda p, x: -float(np.sqrt(abs(p[0]))),
        constraint=lambda p, x: x.copy(),
        constraint_set=Box.whole(1),
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=_interval(-1.0, 1.0),
        x_region=_interval(-1.0, 1.0),
        resolution=0.05,
    )


@dataclass(frozen=True)
class CatalogEntry:
    """A named instance with a one-line summary and, when known, its exact solution map."""

    name: str
    summary: str
    build: Callable[..., Instance]
    exact: Optional[Callable[[], SetValuedMap]] = None


BUILTINS: dict[str, CatalogEntry] = {
    entry.name: entry for entry in (
        CatalogEntry('sqrt_epigraph', 'Φ(p) = [√|p|, ∞): not Lipschitz lsc at (0, 0)', sqrt_epigraph,
                     lambda: exact_map('sqrt_epigraph', sqrt_epigraph_values, 1, 1)),
        CatalogEntry('halfline_jump', 'Φ jumps from [0, ∞) to (-∞, -1] ∪ {0}: calm, not upper Lipschitz',
                     halfline_jump, lambda: exact_map('halfline_jump', halfline_jump_values, 1, 1)),
        CatalogEntry('bilinear_field', 'null base, F(p,x) = {|y| >= |px|}: calm with modulus 0', bilinear_field),
        CatalogEntry('affine_tracking', 'x - p = 0: Lipschitz lsc and calm with constant 1', affine_tracking),
        CatalogEntry('smooth_family', 'smooth bases with F ≡ {0} (option member: 0 or 1)', smooth_family),
        CatalogEntry('quad_box', 'min x² s.t. x - p ∈ [0, 2]', quad_box),
        CatalogEntry('linear_halfline', 'min 2x s.t. x - p >= 0 (option slope)', linear_halfline),
    )
}

EXTRAS: dict[str, CatalogEntry] = {
    entry.name: entry for entry in (
        CatalogEntry('vee_field', 'null base, F(p,x) = [|x| + p, ∞)', vee_field),
        CatalogEntry('parabola_up', 'null base, F(p,x) = [p - x², ∞)', parabola_up),
        CatalogEntry('parabola_down', 'null base, F(p,x) = (-∞, p - x²]', parabola_down),
        CatalogEntry('halfline_jump_swapped', 'f ≡ -2, F(p,x) = Φ(x) of halfline_jump', halfline_jump_swapped),
        CatalogEntry('sqrt_base', 'x - √|p| = 0', sqrt_base),
        CatalogEntry('cubic_tracking', 'x³ - p = 0', cubic_tracking),
        CatalogEntry('half_slope_field', 'f = x, F(p,x) = [x/2, ∞)', half_slope_field),
        CatalogEntry('double_base', '2x = 0', lambda: scaled_base(1)),
        CatalogEntry('square_base', 'x² = 0', lambda: scaled_base(2)),
        CatalogEntry('sqrt_objective', 'min -√|p| over the line', sqrt_objective),
    )
}


def get_entry(name: str) -> CatalogEntry:
    entry = BUILTINS.get(name) or EXTRAS.get(name)
    if entry is None:
        raise ConfigError(f"unknown instance {name!r}", 'instance')
    return entry


def build_instance(name: str, **options) -> Instance:
    """Build a catalog instance by name, passing options such as member or slope to its builder."""
    entry = get_entry(name)
    try:
        instance = entry.build(**options)
    except TypeError as exc:
        raise ConfigError(f"bad options for {name}: {exc}", 'options')
    logger.debug("built instance %s", instance.name)
    return instance


def catalog_summaries() -> list[tuple[str, str]]:
    return [(entry.name, entry.summary) for entry in BUILTINS.values()]


# Inline instances

def _expressions(values, field: str, dim_p: int, dim_x: int) -> list[Expression]:
    if not isinstance(values, list) or not values:
        raise ConfigError("expected a nonempty list of expressions", field)
    parsed = [parse_expression(v, f'{field}[{i}]') for i, v in enumerate(values)]
    for i, expression in enumerate(parsed):
        expression.check_dims(dim_p, dim_x, f'{field}[{i}]')
    return parsed


def _vector(expressions: list[Expression], p: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.array([e(p, x) for e in expressions])


@dataclass(frozen=True)
class FieldSpec:
    """A parsed field description: builds F(p,x) and reports whether it depends on (p, x)."""

    build: Callable[[np.ndarray, np.ndarray], ClosedSet]
    dim: int
    constant: bool


def parse_field(spec: dict, dim_p: int, dim_x: int, field: str = 'instance.field') -> FieldSpec:
    """
    Parse a field description.

    Types: singleton {point}, box {lower, upper}, abs_at_least {radius},
    halfspaces {normals, offsets}, union {members}, product {factors}.
    Numeric parameters are expressions in p and x.
    """
    if not isinstance(spec, dict) or 'type' not in spec:
        raise ConfigError("field must be an object with a type", field)
    kind = spec['type']
    if kind == 'singleton':
        point = _expressions(spec.get('point'), f'{field}.point', dim_p, dim_x)
        return FieldSpec(lambda p, x: Singleton(_vector(point, p, x)), len(point),
                         all(e.constant for e in point))
    if kind == 'box':
        lower = _expressions(spec.get('lower'), f'{field}.lower', dim_p, dim_x)
        upper = _expressions(spec.get('upper'), f'{field}.upper', dim_p, dim_x)
        if len(lower) != len(upper):
            raise ConfigError("box bounds differ in length", field)
        return FieldSpec(lambda p, x: Box(_vector(lower, p, x), _vector(upper, p, x)), len(lower),
                         all(e.constant for e in lower + upper))
    if kind == 'abs_at_least':
        radius = parse_expression(spec.get('radius'), f'{field}.radius')
        radius.check_dims(dim_p, dim_x, f'{field}.radius')
        return FieldSpec(lambda p, x: AbsAtLeast(max(0.0, radius(p, x))), 1, radius.constant)
    if kind == 'halfspaces':
        normals = np.asarray(spec.get('normals'), dtype=float)
        offsets = _expressions(spec.get('offsets'), f'{field}.offsets', dim_p, dim_x)
        if normals.ndim != 2 or normals.shape[0] != len(offsets):
            raise ConfigError("one numeric normal row per offset is required", f'{field}.normals')
        return FieldSpec(lambda p, x: HalfspaceIntersection(normals, _vector(offsets, p, x)), normals.shape[1],
                         all(e.constant for e in offsets))
    if kind in ('union', 'product'):
        key = 'members' if kind == 'union' else 'factors'
        parts_spec = spec.get(key)
        if not isinstance(parts_spec, list) or not parts_spec:
            raise ConfigError(f"{kind} needs a nonempty {key} list", field)
        parts = [parse_field(s, dim_p, dim_x, f'{field}.{key}[{i}]') for i, s in enumerate(parts_spec)]
        constant = all(part.constant for part in parts)
        if kind == 'union':
            if len({part.dim for part in parts}) != 1:
                raise ConfigError("union members must share one dimension", field)
            return FieldSpec(lambda p, x: Union(tuple(part.build(p, x) for part in parts)), parts[0].dim, constant)
        return FieldSpec(lambda p, x: CartesianProduct(tuple(part.build(p, x) for part in parts)),
                         sum(part.dim for part in parts), constant)
    raise ConfigError(f"unknown field type {kind!r}", f'{field}.type')


def _region(bounds, field: str) -> Box:
    try:
        array = np.asarray(bounds, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("region must be a list of [low, high] pairs", field)
    if array.ndim != 2 or array.shape[1] != 2 or np.any(array[:, 0] > array[:, 1]):
        raise ConfigError("region must be a list of [low, high] pairs", field)
    return Box(array[:, 0], array[:, 1])


def build_inline(spec: dict) -> GenEqProblem:
    """Build a generalized equation from an inline definition in a run configuration."""
    p_ref = np.asarray(spec['p_ref'], dtype=float)
    x_ref = np.asarray(spec['x_ref'], dtype=float)
    dim_p, dim_x = p_ref.size, x_ref.size
    base_exprs = _expressions(spec['base'], 'instance.base', dim_p, dim_x)
    field_spec = parse_field(spec['field'], dim_p, dim_x)
    if field_spec.dim != len(base_exprs):
        raise ConfigError(f"field dimension {field_spec.dim} differs from base dimension {len(base_exprs)}",
                          'instance.field')
    base = BaseFn(lambda p, x: _vector(base_exprs, p, x), dim_p, dim_x, len(base_exprs),
                  null=all(e.constant and e(p_ref, x_ref) == 0 for e in base_exprs))
    if field_spec.constant:
        field_fn = FieldFn.constant(field_spec.build(p_ref, x_ref), dim_x)
    else:
        graph_model = None
        if 'graph' in spec:
            graph = spec['graph']
            polyhedron = HalfspaceIntersection(np.asarray(graph['normals'], dtype=float),
                                               np.asarray(graph['offsets'], dtype=float))
            if polyhedron.dim != dim_x + field_spec.dim:
                raise ConfigError("graph lives in X × Y", 'instance.graph')
            graph_model = lambda p, x, y: polyhedron
        field_fn = FieldFn(field_spec.build, field_spec.dim, graph_model)
    try:
        return GenEqProblem(
            name=spec.get('name', 'inline'),
            base=base,
            field=field_fn,
            p_ref=p_ref,
            x_ref=x_ref,
            p_region=_region(spec['p_region'], 'instance.p_region'),
            x_region=_region(spec['x_region'], 'instance.x_region'),
        )
    except ContractViolation as exc:
        raise ConfigError(str(exc), 'instance')
