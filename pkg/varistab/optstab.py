"""Parametric constrained optimization: value functions, Argmin maps and their stability checks."""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from config import Config
from varistab.errors import ContractViolation, DomainError, Unsupported
from varistab.geneq import BaseFn, FieldFn, GenEqProblem, displacement, solve_on_grid
from varistab.metric_core import (
    Box,
    CartesianProduct,
    ClosedSet,
    FiniteCloud,
    MetricSpec,
    Singleton,
    as_vector,
    ball_points,
    box_grid,
    dist_to_set,
    sweep,
)
from varistab.oracle import (
    EmpiricalEstimate,
    ComparisonResult,
    OracleGrid,
    SetValuedMap,
    divergence_trace,
    dyadic_points,
    empirical_modulus,
    verdict_compare,
)
from varistab.slopes_dual import (
    CatalogFunction,
    RadiusSchedule,
    partial_strict_outer_slope_x,
    partial_strict_outer_subdif_slope_x,
)
from varistab.stability import (
    HypothesisStatus,
    LiplscReport,
    StabilityConfig,
    Status,
    Verdict,
    check_liplsc,
)

logger = logging.getLogger(__name__)

DYADIC_SCALES = 12
CONCLUSION_SLACK = 0.05
TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ParamOptProblem:
    """
    Minimize φ(p,x) subject to h(p,x) ∈ C, with a reference pair (p̄, x̄).

    When feasible_set(p) returns R(p) exactly, candidate points are the
    x-grid plus its projections onto R(p).
    """

    name: str
    objective: Callable[[np.ndarray, np.ndarray], float]
    constraint: Callable[[np.ndarray, np.ndarray], np.ndarray]
    constraint_set: ClosedSet
    p_ref: np.ndarray
    x_ref: np.ndarray
    p_region: Box
    x_region: Box
    resolution: float = Config.X_STEP
    kappa: Optional[float] = None
    feasible_set: Optional[Callable[[np.ndarray], ClosedSet]] = None
    objective_grad_x: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    constraint_jac_x: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    objective_descriptor: Optional[Callable[[np.ndarray], CatalogFunction]] = None
    tol_feas: float = Config.TOL_FEAS
    _grid: np.ndarray = field(init=False, repr=False)
    _values: dict = field(init=False, repr=False)

    def __post_init__(self) -> None:
        p_ref = as_vector(self.p_ref, self.p_region.dim, 'p_ref')
        x_ref = as_vector(self.x_ref, self.x_region.dim, 'x_ref')
        object.__setattr__(self, 'p_ref', p_ref)
        object.__setattr__(self, 'x_ref', x_ref)
        if self.constraint_h(p_ref, x_ref).size != self.constraint_set.dim:
            raise ContractViolation("constraint map and constraint set disagree on dimension")
        if not self.is_feasible(p_ref, x_ref):
            raise ContractViolation(f"x_ref is infeasible for {self.name} at p_ref")
        object.__setattr__(self, '_grid', box_grid(self.x_region, self.resolution))
        object.__setattr__(self, '_values', {})

    @property
    def dim_p(self) -> int:
        return self.p_region.dim

    @property
    def dim_x(self) -> int:
        return self.x_region.dim

    @property
    def dim_h(self) -> int:
        return self.constraint_set.dim

    def phi(self, p: np.ndarray, x: np.ndarray) -> float:
        return float(self.objective(p, x))

    def constraint_h(self, p: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.constraint(p, x), dtype=float))

    def is_feasible(self, p: np.ndarray, x: np.ndarray) -> bool:
        return dist_to_set(self.constraint_h(p, x), self.constraint_set) <= self.tol_feas

    def candidates(self, p: np.ndarray) -> np.ndarray:
        grid = self._grid
        if self.feasible_set is None:
            return grid
        region = self.feasible_set(p)
        if region.is_empty():
            return grid
        projected = np.array([region.project(x) for x in grid])
        inside = np.all((projected >= self.x_region.lower) & (projected <= self.x_region.upper), axis=1)
        return np.vstack([grid, projected[inside]])


@dataclass(frozen=True)
class LocalScope:
    """Restrict minimization to R(p) ∩ B(center, radius)."""

    center: np.ndarray
    radius: float


@dataclass
class ValueResult:
    value: float
    argmin: np.ndarray

    @property
    def feasible(self) -> bool:
        return bool(np.isfinite(self.value))


def value_function(prob: ParamOptProblem, p, scope: Optional[LocalScope] = None) -> ValueResult:
    """
    Grid value function valf(p), or locvalf(p, r) with a LocalScope.

    Args:
        prob: The parametric problem
        p: Parameter value
        scope: Optional ball restricting the feasible candidates

    Returns:
        ValueResult; value is +inf when no candidate is feasible and the
        argmin rows are sorted lexicographically
    """
    p = as_vector(p, prob.dim_p, 'p')
    key = (tuple(np.round(p, 12)), None if scope is None else (tuple(np.round(scope.center, 12)), scope.radius))
    cached = prob._values.get(key)
    if cached is not None:
        return cached
    points = prob.candidates(p)
    if scope is not None:
        points = points[np.linalg.norm(points - scope.center, axis=1) <= scope.radius + 1e-12]
    feasible = [x for x in points if prob.is_feasible(p, x)]
    if not feasible:
        result = ValueResult(float('inf'), np.zeros((0, prob.dim_x)))
    else:
        feasible = np.unique(np.round(np.array(feasible), 12) + 0.0, axis=0)
        values = np.array([prob.phi(p, x) for x in feasible])
        best = float(values.min())
        argmin = feasible[values <= best + TIE_TOL]
        result = ValueResult(best, argmin[np.lexsort(argmin.T[::-1])])
    prob._values[key] = result
    return result


@dataclass
class ValueFunctionTable:
    """valf over a p-grid with argmin sets and feasibility flags."""

    p_points: list[list[float]]
    values: list[float]
    argmins: list[list[list[float]]]
    feasible: list[bool]


def value_table(prob: ParamOptProblem, p_points, workers: int = 1) -> ValueFunctionTable:
    results = sweep(lambda p: value_function(prob, p), list(np.atleast_2d(p_points)), workers)
    return ValueFunctionTable(
        p_points=[np.asarray(p).tolist() for p in np.atleast_2d(p_points)],
        values=[r.value for r in results],
        argmins=[r.argmin.tolist() for r in results],
        feasible=[r.feasible for r in results],
    )


def argmin_map(prob: ParamOptProblem) -> SetValuedMap:
    """p ↦ Argmin(p) as a finite cloud of grid minimizers."""
    def evaluate(p: np.ndarray) -> ClosedSet:
        result = value_function(prob, p)
        return FiniteCloud(result.argmin) if result.feasible else FiniteCloud.empty(prob.dim_x)
    return SetValuedMap(f'Argmin[{prob.name}]', evaluate, prob.dim_p, prob.dim_x)


def feasible_map(prob: ParamOptProblem) -> SetValuedMap:
    """p ↦ R(p), exact when a formula is declared, else the feasible grid points."""
    def evaluate(p: np.ndarray) -> ClosedSet:
        if prob.feasible_set is not None:
            return prob.feasible_set(p)
        points = np.array([x for x in prob.candidates(p) if prob.is_feasible(p, x)])
        return FiniteCloud(points) if points.size else FiniteCloud.empty(prob.dim_x)
    return SetValuedMap(f'R[{prob.name}]', evaluate, prob.dim_p, prob.dim_x)


# ============================================================================
# Scalar and problem calmness
# ============================================================================

@dataclass
class ScalarCalmness:
    """Extreme difference quotients of a scalar function around a reference point."""

    side: str
    calm: bool
    lower: float
    upper: float
    diverging_below: bool
    diverging_above: bool
    witness_lower: Optional[list[float]] = None
    witness_upper: Optional[list[float]] = None
    quotients: list[dict] = field(default_factory=list)


def scalar_calmness(g: Callable[[np.ndarray], float], p_bar, side: str = 'both',
                    schedule: Optional[RadiusSchedule] = None, metric: Optional[MetricSpec] = None) -> ScalarCalmness:
    """
    Calmness from above (limsup of quotients < +inf), below (liminf > -inf) or both.

    Quotients (g(p) - g(p̄))/d(p, p̄) are taken at dyadic points ε₀·2⁻ᵏ
    along the axes (k < 12) and at sampled points of every schedule level.
    """
    if side not in ('above', 'below', 'both'):
        raise ContractViolation(f"unknown side {side!r}")
    schedule = schedule or RadiusSchedule()
    p_bar = as_vector(p_bar, name='p_bar')
    metric = metric or MetricSpec.euclidean(p_bar.size)
    g_bar = float(g(p_bar))
    if not np.isfinite(g_bar):
        raise DomainError(f"calmness needs a finite value at p̄, got {g_bar}")
    points = [dyadic_points(p_bar, schedule.eps0, DYADIC_SCALES)]
    for level, eps in enumerate(schedule.radii):
        points.append(ball_points(p_bar, eps, schedule.samples_per_level, schedule.level_seed(level), metric))
    rows = []
    for p in np.vstack(points):
        d = metric.distance(p, p_bar)
        if d <= 0:
            continue
        value = float(g(p))
        rows.append({'p': p.tolist(), 'distance': d, 'quotient': (value - g_bar) / d if value != g_bar else 0.0})
    distances = [r['distance'] for r in rows]
    above = divergence_trace(distances, [r['quotient'] for r in rows], schedule.eps0)
    below = divergence_trace(distances, [-r['quotient'] for r in rows], schedule.eps0)
    top = max(rows, key=lambda r: r['quotient'])
    bottom = min(rows, key=lambda r: r['quotient'])
    upper = float('inf') if above.diverging else top['quotient']
    lower = float('-inf') if below.diverging else bottom['quotient']
    calm = {'above': upper < np.inf, 'below': lower > -np.inf, 'both': upper < np.inf and lower > -np.inf}[side]
    return ScalarCalmness(side, bool(calm), lower, upper, below.diverging, above.diverging,
                          bottom['p'], top['p'], rows)


@dataclass
class ProblemCalmness:
    """Infimum of (φ(p,x) - φ(p̄,x̄))/d(p,p̄) over x ∈ R(p) ∩ B(x̄, r)."""

    calm: bool
    infimum: float
    diverging: bool
    witness: Optional[dict] = None
    quotients: list[dict] = field(default_factory=list)


def problem_calmness(prob: ParamOptProblem, p_bar=None, x_bar=None, radius: float = 0.5,
                     scales: int = DYADIC_SCALES) -> ProblemCalmness:
    """
    Calmness of (P_p̄) at x̄ on dyadic parameters within the radius.

    Raises:
        ContractViolation: if x̄ is not a grid minimizer at p̄
    """
    p_bar = prob.p_ref if p_bar is None else as_vector(p_bar, prob.dim_p, 'p_bar')
    x_bar = prob.x_ref if x_bar is None else as_vector(x_bar, prob.dim_x, 'x_bar')
    reference = prob.phi(p_bar, x_bar)
    if not prob.is_feasible(p_bar, x_bar) or value_function(prob, p_bar).value < reference - 1e-9:
        raise ContractViolation(f"x̄ is not optimal for {prob.name} at p̄ on the grid")
    scope = LocalScope(x_bar, radius)
    rows = []
    for p in dyadic_points(p_bar, radius, scales):
        if not prob.p_region.contains(p):
            continue
        d = float(np.linalg.norm(p - p_bar))
        local = value_function(prob, p, scope)
        if not local.feasible:
            continue
        rows.append({'p': p.tolist(), 'x': local.argmin[0].tolist(), 'distance': d,
                     'quotient': (local.value - reference) / d})
    if not rows:
        return ProblemCalmness(True, float('inf'), False)
    trace = divergence_trace([r['distance'] for r in rows], [-r['quotient'] for r in rows], radius)
    worst = min(rows, key=lambda r: r['quotient'])
    infimum = float('-inf') if trace.diverging else worst['quotient']
    return ProblemCalmness(not trace.diverging, infimum, trace.diverging, worst, rows)


# ============================================================================
# Value function propositions
# ============================================================================

@dataclass
class OptStabConfig:
    """Settings of the value-function checks."""

    schedule: RadiusSchedule = field(default_factory=RadiusSchedule)
    p_radius: float = 0.5
    p_scales: int = Config.P_SCALES
    local_radius: float = 0.5
    lipschitz_samples: int = 256

    def oracle_grid(self, prob: ParamOptProblem, delta: Optional[float] = None) -> OracleGrid:
        points = dyadic_points(prob.p_ref, self.p_radius, self.p_scales)
        points = np.array([p for p in points if prob.p_region.contains(p)]).reshape(-1, prob.dim_p)
        return OracleGrid(points, prob.resolution, prob.x_region, delta, self.p_radius)


@dataclass
class PropositionReport:
    """Hypotheses and conclusion of one value-function proposition."""

    which: str
    instance: str
    hypotheses: list[HypothesisStatus]
    conclusion: HypothesisStatus
    consistent: bool
    constants: dict = field(default_factory=dict)

    @property
    def verdict(self) -> Verdict:
        if self.conclusion.failed or any(h.failed for h in self.hypotheses):
            return Verdict.FAIL
        return Verdict.PASS


def _joint_lipschitz(prob: ParamOptProblem, center_p: np.ndarray, center_x: np.ndarray, radius: float,
                     count: int, seed: int) -> tuple[float, dict]:
    """Sampled Lipschitz constant of φ on B(center, radius) in P × X with the sum metric."""
    metric = MetricSpec.product(MetricSpec.euclidean(prob.dim_p), MetricSpec.euclidean(prob.dim_x))
    center = np.concatenate([center_p, center_x])
    first = ball_points(center, radius, count, seed, metric)
    second = ball_points(center, radius, count, seed + 1, metric)[::-1]
    best, witness = 0.0, {}
    for a, b in zip(first, second):
        d = metric.distance(a, b)
        if d <= 0:
            continue
        gap = abs(prob.phi(a[:prob.dim_p], a[prob.dim_p:]) - prob.phi(b[:prob.dim_p], b[prob.dim_p:])) / d
        if gap > best:
            best, witness = gap, {'first': a.tolist(), 'second': b.tolist(), 'quotient': gap}
    return best, witness


def _modulus_status(hyp_id: str, name: str, estimate: EmpiricalEstimate) -> HypothesisStatus:
    if estimate.diverging:
        return HypothesisStatus(hyp_id, Status.FAILS, {name: estimate.value},
                                estimate.witness or {'kind': estimate.kind},
                                note=f"{estimate.kind} quotients diverge across dyadic scales")
    return HypothesisStatus(hyp_id, Status.HOLDS, {name: estimate.value})


def _calm_status(hyp_id: str, result: ScalarCalmness, note: str) -> HypothesisStatus:
    constants = {'lower': result.lower, 'upper': result.upper}
    if result.calm:
        return HypothesisStatus(hyp_id, Status.HOLDS, constants, note=note)
    witness = result.witness_upper if result.diverging_above else result.witness_lower
    return HypothesisStatus(hyp_id, Status.FAILS, constants, {'p': witness}, note=note)


def check_value_function_props(prob: ParamOptProblem, which: str,
                               config: Optional[OptStabConfig] = None) -> PropositionReport:
    """
    Check the hypotheses of a value-function proposition, then its conclusion.

    Args:
        prob: The parametric problem with x̄ ∈ Argmin(p̄)
        which: 'P1' (valf calm below ⇒ problem calm), 'P2' (R Lipschitz lsc and
            φ calm above ⇒ valf calm above), 'P3' (R upper Lipschitz and φ
            Lipschitz ⇒ valf calm below) or 'P4' (R calm and φ locally
            Lipschitz ⇒ locvalf calm below)
        config: Radii and grids

    Returns:
        PropositionReport; hypotheses holding with a failed conclusion are
        logged as an inconsistency
    """
    config = config or OptStabConfig()
    schedule = config.schedule
    p_bar, x_bar = prob.p_ref, prob.x_ref

    def valf(p: np.ndarray) -> float:
        return value_function(prob, p).value

    hypotheses: list[HypothesisStatus] = []
    constants: dict = {}
    if which == 'P1':
        below = scalar_calmness(valf, p_bar, 'below', schedule)
        hypotheses.append(_calm_status('valf_below', below, 'valf calm from below at p̄'))
        calm = problem_calmness(prob, radius=config.local_radius)
        constants['infimum'] = calm.infimum
        conclusion = (HypothesisStatus('problem_calm', Status.HOLDS, {'infimum': calm.infimum}) if calm.calm
                      else HypothesisStatus('problem_calm', Status.FAILS, {'infimum': calm.infimum},
                                            calm.witness or {'reason': 'diverging'}))
    elif which == 'P2':
        lsc = empirical_modulus(feasible_map(prob), 'liplsc', p_bar, x_bar, config.oracle_grid(prob))
        hypotheses.append(_modulus_status('R_liplsc', 'l', lsc))
        metric = MetricSpec.product(MetricSpec.euclidean(prob.dim_p), MetricSpec.euclidean(prob.dim_x))
        joint = scalar_calmness(lambda z: prob.phi(z[:prob.dim_p], z[prob.dim_p:]),
                                np.concatenate([p_bar, x_bar]), 'above', schedule, metric)
        hypotheses.append(_calm_status('phi_above', joint, 'φ calm from above at (p̄, x̄)'))
        kappa_phi = max(0.0, joint.upper)
        above = scalar_calmness(valf, p_bar, 'above', schedule)
        limit = kappa_phi * (1 + lsc.value) + CONCLUSION_SLACK
        constants.update({'l': lsc.value, 'kappa_phi': kappa_phi, 'limit': limit, 'upper': above.upper})
        if above.calm and above.upper <= limit:
            conclusion = HypothesisStatus('valf_above', Status.HOLDS, {'upper': above.upper, 'limit': limit})
        else:
            conclusion = HypothesisStatus('valf_above', Status.FAILS, {'upper': above.upper, 'limit': limit},
                                          {'p': above.witness_upper})
    elif which == 'P3':
        upper_lip = empirical_modulus(feasible_map(prob), 'upper_lipschitz', p_bar, x_bar, config.oracle_grid(prob))
        hypotheses.append(_modulus_status('R_upper_lipschitz', 'ell', upper_lip))
        kappa, witness = _joint_lipschitz(prob, p_bar, x_bar, config.p_radius, config.lipschitz_samples, schedule.seed)
        hypotheses.append(HypothesisStatus('phi_lipschitz', Status.SAMPLED, {'kappa': kappa, 'witness': witness},
                                           note='sampled Lipschitz constant of φ'))
        below = scalar_calmness(valf, p_bar, 'below', schedule)
        limit = -kappa * (upper_lip.value + 2) - CONCLUSION_SLACK
        calm = problem_calmness(prob, radius=config.local_radius)
        constants.update({'ell': upper_lip.value, 'kappa': kappa, 'limit': limit, 'lower': below.lower,
                          'problem_infimum': calm.infimum, 'problem_calm': calm.calm})
        if below.calm and below.lower >= limit:
            conclusion = HypothesisStatus('valf_below', Status.HOLDS, {'lower': below.lower, 'limit': limit})
        else:
            conclusion = HypothesisStatus('valf_below', Status.FAILS, {'lower': below.lower, 'limit': limit},
                                          {'p': below.witness_lower})
    elif which == 'P4':
        r = config.local_radius
        calm_r = empirical_modulus(feasible_map(prob), 'calm', p_bar, x_bar, config.oracle_grid(prob, delta=r))
        hypotheses.append(_modulus_status('R_calm', 'ell', calm_r))
        kappa, witness = _joint_lipschitz(prob, p_bar, x_bar, r, config.lipschitz_samples, schedule.seed)
        hypotheses.append(HypothesisStatus('phi_local_lipschitz', Status.SAMPLED, {'kappa': kappa, 'witness': witness},
                                           note='sampled Lipschitz constant of φ near (p̄, x̄)'))
        scope = LocalScope(x_bar, r)
        below = scalar_calmness(lambda p: value_function(prob, p, scope).value, p_bar, 'below', schedule)
        constants.update({'ell': calm_r.value, 'kappa': kappa, 'radius': r, 'lower': below.lower})
        conclusion = _calm_status('locvalf_below', below, f'locvalf(·, {r}) calm from below')
    else:
        raise ContractViolation(f"unknown proposition {which!r}")
    consistent = not (not any(h.failed for h in hypotheses) and conclusion.failed)
    if not consistent:
        logger.error("%s on %s: hypotheses hold but the conclusion fails", which, prob.name)
    return PropositionReport(which, prob.name, hypotheses, conclusion, consistent, constants)


# ============================================================================
# Lipschitz lsc of Argmin
# ============================================================================

def argmin_generalized_equation(prob: ParamOptProblem) -> GenEqProblem:
    """
    The equation (φ(p,x) - valf(p), h(p,x)) ∈ {0} × C, whose solution map is Argmin.

    The image carries the sum metric of R and the constraint space.
    """
    dim_h = prob.dim_h

    def evaluate(p: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.concatenate([[prob.phi(p, x) - value_function(prob, p).value], prob.constraint_h(p, x)])

    base = BaseFn(evaluate, prob.dim_p, prob.dim_x, 1 + dim_h)
    field_fn = FieldFn.constant(CartesianProduct((Singleton(np.zeros(1)), prob.constraint_set)), prob.dim_x)
    return GenEqProblem(
        name=f'argmin[{prob.name}]',
        base=base,
        field=field_fn,
        p_ref=prob.p_ref,
        x_ref=prob.x_ref,
        p_region=prob.p_region,
        x_region=prob.x_region,
        y_metric=MetricSpec((1, dim_h)),
    )


def estimate_kappa(prob: ParamOptProblem, radius: float, count: int = 256, seed: int = Config.SEED) -> float:
    """Sampled sup of ‖h(p,x₁) - h(p,x₂)‖/‖x₁ - x₂‖ over p, x₁, x₂ near (p̄, x̄)."""
    ps = ball_points(prob.p_ref, radius, count, seed)
    first = ball_points(prob.x_ref, radius, count, seed + 1)
    second = ball_points(prob.x_ref, radius, count, seed + 2)[::-1]
    best = 0.0
    for p, a, b in zip(ps, first, second):
        d = float(np.linalg.norm(a - b))
        if d > 0:
            best = max(best, float(np.linalg.norm(prob.constraint_h(p, a) - prob.constraint_h(p, b))) / d)
    return best


@dataclass
class ArgminReport:
    """Hypotheses of the Argmin Lipschitz lsc criterion and the delegated equation check."""

    instance: str
    variant: str
    kappa: float
    hypotheses: list[HypothesisStatus]
    equation: Optional[LiplscReport]
    empirical: Optional[EmpiricalEstimate]
    comparison: Optional[ComparisonResult]
    coincides: bool
    verdict: Verdict


def _slope_condition(prob: ParamOptProblem, variant: str, kappa: float, schedule: RadiusSchedule) -> HypothesisStatus:
    if variant == 'slope':
        estimate = partial_strict_outer_slope_x(prob.phi, prob.p_ref, prob.x_ref, schedule)
        value, witness = estimate.value, {'levels': estimate.values, 'point': estimate.witnesses[-1]}
    elif variant == 'subdifferential':
        if prob.objective_descriptor is None:
            raise Unsupported("the subdifferential variant needs an objective descriptor")
        estimate = partial_strict_outer_subdif_slope_x(prob.objective_descriptor, prob.p_ref, prob.x_ref, schedule)
        value, witness = estimate.value, {'levels': estimate.values, 'point': estimate.witnesses[-1]}
    elif variant == 'smooth':
        if prob.objective_grad_x is None or prob.constraint_jac_x is None:
            raise Unsupported("the smooth variant needs ∇ₓφ and ∇ₓh")
        value = float(np.linalg.norm(prob.objective_grad_x(prob.p_ref, prob.x_ref)))
        ps = ball_points(prob.p_ref, schedule.eps0, schedule.samples_per_level, schedule.seed)
        xs = ball_points(prob.x_ref, schedule.eps0, schedule.samples_per_level, schedule.seed + 1)
        norms = [float(np.linalg.norm(np.atleast_2d(prob.constraint_jac_x(p, x)), 2)) for p, x in zip(ps, xs)]
        kappa = max(norms)
        witness = {'gradient_norm': value, 'jacobian_sup': kappa}
    else:
        raise ContractViolation(f"unknown variant {variant!r}")
    constants = {'slope': value, 'kappa': kappa}
    if value > kappa:
        return HypothesisStatus('v', Status.HOLDS, constants)
    return HypothesisStatus('v', Status.FAILS, constants, witness, note=f'{value:.4g} does not exceed κ = {kappa:.4g}')


def check_argmin_liplsc(prob: ParamOptProblem, variant: str = 'slope',
                        config: Optional[StabilityConfig] = None) -> ArgminReport:
    """
    Lipschitz lsc of Argmin at (p̄, x̄) through its generalized equation.

    κ is the larger of the declared and the sampled x-Lipschitz constant of
    h, inflated by 10% before comparing with the slope of φ.
    """
    config = config or StabilityConfig()
    schedule = config.schedule
    logger.info("check_argmin_liplsc %s (%s) started", prob.name, variant)
    if value_function(prob, prob.p_ref).value < prob.phi(prob.p_ref, prob.x_ref) - 1e-9:
        raise ContractViolation(f"x̄ is not a grid minimizer of {prob.name} at p̄")
    sampled = estimate_kappa(prob, schedule.eps0, seed=schedule.seed)
    if prob.kappa is not None and prob.kappa < sampled - 1e-9:
        logger.warning("declared κ=%.4g is below the sampled constant %.4g", prob.kappa, sampled)
    kappa = max(prob.kappa or 0.0, sampled) * (1 + Config.KAPPA_INFLATION)

    def valf(p: np.ndarray) -> float:
        return value_function(prob, p).value

    phi_at_ref = scalar_calmness(lambda p: prob.phi(p, prob.x_ref), prob.p_ref, 'both', schedule)
    h_ref = prob.constraint_h(prob.p_ref, prob.x_ref)
    h_at_ref = scalar_calmness(lambda p: float(np.linalg.norm(prob.constraint_h(p, prob.x_ref) - h_ref)),
                               prob.p_ref, 'above', schedule)
    valf_calm = scalar_calmness(valf, prob.p_ref, 'both', schedule)
    calm_parts = [('φ(·,x̄)', phi_at_ref), ('h(·,x̄)', h_at_ref), ('valf', valf_calm)]
    failing = next(((name, r) for name, r in calm_parts if not r.calm), None)
    if failing is None:
        calm_status = HypothesisStatus('iv', Status.HOLDS, {name: [r.lower, r.upper] for name, r in calm_parts})
    else:
        name, result = failing
        calm_status = HypothesisStatus('iv', Status.FAILS, {name: [result.lower, result.upper]},
                                       {'map': name, 'p': result.witness_upper if result.diverging_above
                                        else result.witness_lower})
    continuity = _phi_continuity(prob, schedule)
    hypotheses = [
        HypothesisStatus('i', Status.HOLDS, note='finite-dimensional spaces are complete'),
        continuity,
        HypothesisStatus('iii', Status.HOLDS, {'kappa': kappa, 'sampled': sampled, 'declared': prob.kappa}),
        calm_status,
        _slope_condition(prob, variant, kappa, schedule),
    ]
    equation, empirical, comparison, coincides = None, None, None, True
    if not any(h.failed for h in hypotheses):
        ge = argmin_generalized_equation(prob)
        equation = check_liplsc(ge, config)
        coincides = _coincides(prob, ge, config)
        validation_p = config.validation_points(ge)
        if equation.bound is not None and len(validation_p):
            grid = OracleGrid(validation_p, prob.resolution, prob.x_region,
                              radius=float(np.max(np.linalg.norm(validation_p - prob.p_ref, axis=1))))
            empirical = empirical_modulus(argmin_map(prob), 'liplsc', prob.p_ref, prob.x_ref, grid)
            comparison = verdict_compare(equation.bound, empirical, config.slack)
    if any(h.failed for h in hypotheses):
        verdict = Verdict.FAIL
    elif equation.verdict is not Verdict.PASS:
        verdict = equation.verdict
    elif comparison is not None and not comparison.passed or not coincides:
        verdict = Verdict.FAIL
    else:
        verdict = Verdict.PASS
    logger.info("check_argmin_liplsc %s finished: %s", prob.name, verdict.value)
    return ArgminReport(prob.name, variant, kappa, hypotheses, equation, empirical, comparison, coincides, verdict)


def _phi_continuity(prob: ParamOptProblem, schedule: RadiusSchedule) -> HypothesisStatus:
    """Sampled continuity of φ(p̄,·) at x̄; jumps must shrink with the radius."""
    center = prob.phi(prob.p_ref, prob.x_ref)
    unit = ball_points(np.zeros(prob.dim_x), 1.0, schedule.samples_per_level, schedule.seed)
    jumps = [max(abs(prob.phi(prob.p_ref, prob.x_ref + r * u) - center) for u in unit) for r in schedule.radii]
    if jumps[-1] > 1e-6 and jumps[-1] >= 0.9 * jumps[0]:
        return HypothesisStatus('ii', Status.FAILS, {'jumps': jumps}, {'x': prob.x_ref.tolist(), 'jump': jumps[-1]})
    return HypothesisStatus('ii', Status.SAMPLED, {'jumps': jumps})


def _coincides(prob: ParamOptProblem, ge: GenEqProblem, config: StabilityConfig) -> bool:
    """G(p) of the constructed equation equals Argmin(p) on the grid at each validation parameter."""
    for p in config.validation_points(ge):
        minimizers = value_function(prob, p).argmin
        if any(displacement(ge, p, x) > Config.TOL_SOLUTION for x in minimizers):
            return False
        for x in solve_on_grid(ge, p, resolution=prob.resolution).points:
            if not prob.is_feasible(p, x) or prob.phi(p, x) > value_function(prob, p).value + Config.TOL_SOLUTION:
                return False
    return True
