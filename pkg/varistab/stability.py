"""Hypothesis checkers for Lipschitz lsc and calmness of solution maps, and the descent tracker."""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from config import Config
from varistab.errors import ContractViolation, NoProjection, NoSolutionFound, Unsupported
from varistab.geneq import (
    GenEqProblem,
    displacement,
    displacement_lsc_check,
    graph_displacement,
    graph_projector,
    solve_on_grid,
)
from varistab.metric_core import (
    Box,
    as_vector,
    ball_directions,
    ball_points,
    box_grid,
    dist_to_set,
    excess,
)
from varistab.oracle import (
    EmpiricalEstimate,
    ComparisonResult,
    OracleGrid,
    divergence_trace,
    dyadic_points,
    empirical_modulus,
    solution_map,
    verdict_compare,
)
from varistab.slopes_dual import (
    RadiusSchedule,
    SlopeEstimate,
    c_constant,
    normal_cone_generators,
    outer_norm,
    partial_strict_outer_slope_x,
    strict_outer_slope,
)

logger = logging.getLogger(__name__)

CONTINUITY_FLOOR = 1e-6
UNIFORM_X_POINTS = 40
UNIFORM_Y_SAMPLES = 64
USC_DIRECTIONS = 16


class Status(str, Enum):
    HOLDS = 'Holds'
    FAILS = 'Fails'
    SAMPLED = 'SampledEvidence'


class Verdict(str, Enum):
    PASS = 'Pass'
    FAIL = 'Fail'
    UNDETERMINED = 'Undetermined'

    @property
    def exit_code(self) -> int:
        return {'Pass': 0, 'Fail': 2, 'Undetermined': 3}[self.value]


@dataclass
class HypothesisStatus:
    """Status of one theorem hypothesis; a failure always names its counterexample."""

    id: str
    status: Status
    constants: dict = field(default_factory=dict)
    witness: Optional[dict] = None
    note: str = ''

    def __post_init__(self) -> None:
        if self.status is Status.FAILS and not self.witness:
            raise ContractViolation(f"hypothesis ({self.id}) fails without a witness")

    @property
    def failed(self) -> bool:
        return self.status is Status.FAILS


@dataclass
class StabilityConfig:
    """Settings shared by the theorem checkers."""

    schedule: RadiusSchedule = field(default_factory=RadiusSchedule)
    p_radius: float = 0.5
    p_scales: int = Config.P_SCALES
    validation_p: Optional[list[float]] = None
    x_step: float = Config.X_STEP
    delta_star: Optional[float] = None
    slack: float = Config.VALIDATION_SLACK
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.p_radius > 0 or self.p_scales < 1:
            raise ContractViolation("p_radius must be positive and p_scales at least 1")
        if not self.x_step > 0 or self.slack < 0:
            raise ContractViolation("x_step must be positive and slack nonnegative")

    def radius_star(self, prob: GenEqProblem) -> float:
        """δ*, by default half the search-region radius around x̄."""
        return self.delta_star if self.delta_star is not None else prob.region_radius / 2

    def p_points(self, prob: GenEqProblem) -> np.ndarray:
        """Dyadic p-points around p̄ that stay in the parameter region."""
        points = dyadic_points(prob.p_ref, self.p_radius, self.p_scales)
        return np.array([p for p in points if prob.p_region.contains(p)]).reshape(-1, prob.dim_p)

    def validation_points(self, prob: GenEqProblem) -> np.ndarray:
        """Grid-aligned validation parameters, p̄ ± t·e_i for t in {0.1, …, 0.5} by default."""
        steps = self.validation_p or [0.1, 0.2, 0.3, 0.4, 0.5]
        rows = []
        for t in steps:
            for i in range(prob.dim_p):
                for sign in (1.0, -1.0):
                    point = prob.p_ref.copy()
                    point[i] += sign * t
                    if prob.p_region.contains(point):
                        rows.append(point)
        return np.array(rows).reshape(-1, prob.dim_p)


# ============================================================================
# Perturbation constants
# ============================================================================

@dataclass
class PerturbationConstants:
    """l_F, l_f (pointwise) or ℓ_F, ℓ_f (uniform), with per-p quotients."""

    mode: str
    l_field: float
    l_base: float
    diverging_field: bool
    diverging_base: bool
    witness_field: dict = field(default_factory=dict)
    witness_base: dict = field(default_factory=dict)
    quotients_field: list[dict] = field(default_factory=list)
    quotients_base: list[dict] = field(default_factory=list)

    @property
    def total(self) -> float:
        return self.l_base + self.l_field


def _reduce(rows: list[dict], radius: float) -> tuple[float, bool, dict]:
    trace = divergence_trace([r['distance'] for r in rows], [r['quotient'] for r in rows], radius)
    best = max(rows, key=lambda r: r['quotient'], default=None)
    if best is None:
        return 0.0, False, {}
    value = float('inf') if trace.diverging else best['quotient']
    return value, trace.diverging, best


def _y_step(prob: GenEqProblem) -> float:
    per_axis = max(3, int(round(UNIFORM_Y_SAMPLES ** (1 / prob.dim_y))))
    return max(float(np.max(prob.y_region.upper - prob.y_region.lower)) / per_axis, 1e-6)


def _uniform_x_grid(prob: GenEqProblem, radius: float) -> np.ndarray:
    region = prob.x_region.intersect(Box.around(prob.x_ref, radius))
    step = max(float(np.max(region.upper - region.lower)) / UNIFORM_X_POINTS, 1e-6)
    return box_grid(region, step)


def estimate_perturbation_constants(prob: GenEqProblem, mode: str, p_points: np.ndarray,
                                    x_radius: Optional[float] = None) -> PerturbationConstants:
    """
    Lipschitz-type constants of the field and base with respect to p.

    Args:
        prob: The generalized equation
        mode: 'pointwise' (at x̄) or 'uniform' (over an x-grid around x̄)
        p_points: Parameters, p̄ excluded
        x_radius: Radius of the uniform x-grid (defaults to half the region radius)

    Returns:
        PerturbationConstants; a constant is +inf when its dyadic trace diverges
    """
    if mode not in ('pointwise', 'uniform'):
        raise ContractViolation(f"unknown mode {mode!r}")
    p_points = [p for p in np.atleast_2d(p_points) if np.linalg.norm(p - prob.p_ref) > 0]
    if not p_points:
        raise ContractViolation("no parameter point distinct from p̄")
    radius = max(float(np.linalg.norm(p - prob.p_ref)) for p in p_points)
    field_rows, base_rows = [], []
    if mode == 'pointwise':
        for p in p_points:
            d = float(np.linalg.norm(p - prob.p_ref))
            gap_field = dist_to_set(prob.y_ref, prob.field(p, prob.x_ref))
            gap_base = prob.y_metric.distance(prob.base(p, prob.x_ref), prob.y_ref)
            field_rows.append({'p': p.tolist(), 'x': prob.x_ref.tolist(), 'distance': d, 'quotient': gap_field / d})
            base_rows.append({'p': p.tolist(), 'x': prob.x_ref.tolist(), 'distance': d, 'quotient': gap_base / d})
    else:
        xs = _uniform_x_grid(prob, x_radius if x_radius is not None else prob.region_radius / 2)
        y_step = _y_step(prob)
        for p in p_points:
            d = float(np.linalg.norm(p - prob.p_ref))
            worst_field, worst_base = (0.0, prob.x_ref), (0.0, prob.x_ref)
            for x in xs:
                moved, anchored = prob.field(p, x), prob.field(prob.p_ref, x)
                if moved.is_empty():
                    continue
                if anchored.is_empty():
                    worst_field = (float('inf'), x)
                else:
                    gap_field = excess(moved, anchored, step=y_step, bounds=prob.y_region)
                    if gap_field > worst_field[0]:
                        worst_field = (gap_field, x)
                gap_base = prob.y_metric.distance(prob.base(p, x), prob.base(prob.p_ref, x))
                if gap_base > worst_base[0]:
                    worst_base = (gap_base, x)
            field_rows.append({'p': p.tolist(), 'x': np.asarray(worst_field[1]).tolist(), 'distance': d,
                               'quotient': worst_field[0] / d})
            base_rows.append({'p': p.tolist(), 'x': np.asarray(worst_base[1]).tolist(), 'distance': d,
                              'quotient': worst_base[0] / d})
    l_field, div_field, wit_field = _reduce(field_rows, radius)
    l_base, div_base, wit_base = _reduce(base_rows, radius)
    logger.debug("%s constants of %s: l_F=%s l_f=%s", mode, prob.name, l_field, l_base)
    return PerturbationConstants(mode, l_field, l_base, div_field, div_base, wit_field, wit_base,
                                 field_rows, base_rows)


def zeta_liplsc(c: float, l_field: float, l_base: float, delta_star: float) -> float:
    """Validation radius from the Lipschitz lsc proof; informational."""
    total = l_field + l_base + 1
    return min(0.5, c / (2 * total), 1 / total) * delta_star


def zeta_calm(slope: float, l_field: float, l_base: float, delta_star: float) -> float:
    """Validation radius from the calmness proof; informational."""
    return min(delta_star / 16, slope * delta_star / (2 * (l_base + 2 * l_field + 1)),
               delta_star / (16 * (l_field + 1)), delta_star / (16 * (l_base + 1)),
               delta_star / (l_base + 2 * l_field + 1))


# --- Hypothesis helpers ---

def _constant_status(hyp_id: str, name: str, value: float, diverging: bool, witness: dict) -> HypothesisStatus:
    if diverging or not np.isfinite(value):
        return HypothesisStatus(hyp_id, Status.FAILS, {name: value},
                                witness or {'reason': 'empty value set'},
                                note=f"{name} quotients grow without bound across dyadic p-scales")
    return HypothesisStatus(hyp_id, Status.HOLDS, {name: value})


def _check_centres(prob: GenEqProblem, radius: float) -> list[np.ndarray]:
    """x̄ and axis offsets at quarter steps of the radius, kept inside the x-region."""
    offsets = np.arange(-4, 5) * (radius / 4)
    centres = [prob.x_ref + o * np.eye(prob.dim_x)[i] for i in range(prob.dim_x) for o in offsets]
    return [x for x in centres if prob.x_region.contains(x)]


def _shrinks(levels: list[float]) -> bool:
    return not (levels[-1] > CONTINUITY_FLOOR and levels[-1] >= 0.9 * levels[0])


def _lsc_status(hyp_id: str, prob: GenEqProblem, p_values: np.ndarray, schedule: RadiusSchedule,
                radius: float) -> HypothesisStatus:
    """
    Sampled closedness and u.s.c. of F(p,·) around x̄.

    At every centre x the excess of F(p,z) over F(p,x) must fall towards 0
    as z → x; ψ(p,·) lower semicontinuity is checked at the same centres.
    """
    centres = _check_centres(prob, radius)
    unit = ball_points(np.zeros(prob.dim_x), 1.0, schedule.samples_per_level, schedule.seed)[:USC_DIRECTIONS]
    y_step = _y_step(prob)
    worst, worst_excess = 0.0, 0.0
    for p in p_values:
        for x in centres:
            anchored = prob.field(p, x)
            levels, witness = [], None
            for r in schedule.radii:
                gaps = [(excess(prob.field(p, x + r * u), anchored, step=y_step, bounds=prob.y_region), x + r * u)
                        for u in unit]
                gap, z = max(gaps, key=lambda g: g[0])
                levels.append(gap)
                witness = z
            if not _shrinks(levels):
                return HypothesisStatus(hyp_id, Status.FAILS, {'excess': levels},
                                        {'p': p.tolist(), 'x': x.tolist(), 'nearby': witness.tolist(),
                                         'excess': levels[-1]},
                                        note='excess of F(p,z) over F(p,x) does not vanish as z → x')
            worst_excess = max(worst_excess, levels[-1])
            check = displacement_lsc_check(prob, p, x, schedule)
            if not check.holds:
                return HypothesisStatus(hyp_id, Status.FAILS, {'margin': check.margin},
                                        {'p': p.tolist(), 'x': x.tolist(), 'margin': check.margin,
                                         'nearby': None if check.witness is None else check.witness.tolist()},
                                        note='liminf ψ(p,z) < ψ(p,x) as z → x')
            worst = min(worst, check.margin)
    return HypothesisStatus(hyp_id, Status.SAMPLED,
                            {'margin': worst, 'excess': worst_excess, 'centres': len(centres) * len(p_values)})


def _continuity_status(hyp_id: str, prob: GenEqProblem, p_values: np.ndarray, schedule: RadiusSchedule,
                       radius: float) -> HypothesisStatus:
    """Sampled continuity of f(p,·) on B(x̄, radius): jumps must shrink with the radius at every centre."""
    centres = _check_centres(prob, radius)
    unit = ball_points(np.zeros(prob.dim_x), 1.0, schedule.samples_per_level, schedule.seed)
    largest = 0.0
    for p in p_values:
        for x in centres:
            anchored = prob.base(p, x)
            jumps, witness = [], None
            for r in schedule.radii:
                values = [prob.y_metric.distance(prob.base(p, x + r * u), anchored) for u in unit]
                jumps.append(max(values))
                witness = x + r * unit[int(np.argmax(values))]
            if not _shrinks(jumps):
                return HypothesisStatus(hyp_id, Status.FAILS, {'jumps': jumps},
                                        {'p': p.tolist(), 'x': x.tolist(), 'nearby': witness.tolist(),
                                         'jump': jumps[-1]},
                                        note='f(p,·) jumps near a sampled centre')
            largest = max(largest, jumps[-1])
    return HypothesisStatus(hyp_id, Status.SAMPLED, {'jump': largest, 'centres': len(centres) * len(p_values)})


def _slope_status(hyp_id: str, estimate: SlopeEstimate) -> HypothesisStatus:
    constants = {'slope': estimate.value, 'levels': estimate.values}
    if estimate.positive:
        return HypothesisStatus(hyp_id, Status.HOLDS, constants,
                                note='' if estimate.monotone else 'per-level values are not monotone')
    witness = next((w for w in reversed(estimate.witnesses) if w is not None), None)
    return HypothesisStatus(hyp_id, Status.FAILS, constants,
                            {'point': witness, 'levels': estimate.values},
                            note='slope values decay to zero across levels')


def _verdict(statuses: list[HypothesisStatus], validated: Optional[bool]) -> Verdict:
    if any(s.failed for s in statuses) or validated is False:
        return Verdict.FAIL
    if validated is None:
        return Verdict.UNDETERMINED
    return Verdict.PASS


# ============================================================================
# Lipschitz lower semicontinuity
# ============================================================================

@dataclass
class ValidationRow:
    p: list[float]
    distance: float
    nearest: Optional[float]
    allowed: float
    passed: Optional[bool]


@dataclass
class LiplscReport:
    """Hypotheses, constants and validated bound for Lipschitz lsc of G at (p̄, x̄)."""

    instance: str
    statuses: list[HypothesisStatus]
    constants: PerturbationConstants
    slope: SlopeEstimate
    bound: Optional[float]
    zeta: Optional[float]
    validation: list[ValidationRow]
    empirical: Optional[EmpiricalEstimate]
    verdict: Verdict


def check_liplsc(prob: GenEqProblem, config: Optional[StabilityConfig] = None) -> LiplscReport:
    """
    Check the hypotheses for Lipschitz lsc of the solution map and validate the bound.

    The bound (l_f + l_F)/c is checked on grid-aligned parameters: for each,
    some x ∈ solve_on_grid(prob, p) must satisfy d(x, x̄) <= bound·d(p,p̄)·(1+slack)
    plus one grid spacing.
    """
    config = config or StabilityConfig()
    logger.info("check_liplsc %s started", prob.name)
    delta_star = config.radius_star(prob)
    schedule = config.schedule
    constants = estimate_perturbation_constants(prob, 'pointwise', config.p_points(prob))
    validation_p = config.validation_points(prob)
    nearby_p = np.vstack([prob.p_ref[None, :], validation_p[:2]])
    slope = partial_strict_outer_slope_x(lambda p, x: displacement(prob, p, x), prob.p_ref, prob.x_ref,
                                         schedule, prob.p_metric, prob.x_metric)
    statuses = [
        HypothesisStatus('i', Status.HOLDS, note='finite-dimensional spaces are complete'),
        _lsc_status('ii', prob, nearby_p, schedule, delta_star),
        _constant_status('iii', 'l_F', constants.l_field, constants.diverging_field, constants.witness_field),
        _continuity_status('iv', prob, nearby_p, schedule, delta_star),
        _constant_status('v', 'l_f', constants.l_base, constants.diverging_base, constants.witness_base),
        _slope_status('vi', slope),
    ]
    bound, zeta, rows, empirical, validated = None, None, [], None, None
    if not any(s.failed for s in statuses):
        c = slope.value
        bound = constants.total / c if np.isfinite(c) else 0.0
        if not np.isfinite(c):
            statuses[-1].note = 'c = +inf, so the bound (l_f + l_F)/c is reported as 0'
        zeta = zeta_liplsc(c, constants.l_field, constants.l_base, delta_star) if np.isfinite(c) else None
        validated = True
        for p in validation_p:
            d = float(np.linalg.norm(p - prob.p_ref))
            allowed = bound * d * (1 + config.slack) + config.x_step
            sample = solve_on_grid(prob, p, resolution=config.x_step, workers=config.workers)
            nearest = sample.nearest(prob.x_ref)
            if nearest is None:
                rows.append(ValidationRow(p.tolist(), d, None, allowed, None))
                if validated:
                    validated = None
                continue
            gap = float(np.linalg.norm(nearest - prob.x_ref))
            rows.append(ValidationRow(p.tolist(), d, gap, allowed, gap <= allowed))
            if gap > allowed:
                validated = False
        if len(validation_p):
            grid = OracleGrid(validation_p, config.x_step, prob.x_region, radius=float(np.max(
                np.linalg.norm(validation_p - prob.p_ref, axis=1))))
            empirical = empirical_modulus(solution_map(prob, config.x_step, workers=config.workers), 'liplsc',
                                          prob.p_ref, prob.x_ref, grid, config.workers, zeta)
    verdict = _verdict(statuses, validated)
    logger.info("check_liplsc %s finished: %s", prob.name, verdict.value)
    return LiplscReport(prob.name, statuses, constants, slope, bound, zeta, rows, empirical, verdict)


# ============================================================================
# Calmness
# ============================================================================

@dataclass
class CalmReport:
    """Hypotheses, uniform constants and validated modulus bound for calmness of G."""

    instance: str
    statuses: list[HypothesisStatus]
    constants: PerturbationConstants
    slope: SlopeEstimate
    bound: Optional[float]
    zeta: Optional[float]
    empirical: Optional[EmpiricalEstimate]
    comparison: Optional[ComparisonResult]
    verdict: Verdict


def _calm_oracle(prob: GenEqProblem, config: StabilityConfig, delta: float,
                 zeta: Optional[float] = None) -> Optional[EmpiricalEstimate]:
    validation_p = config.validation_points(prob)
    if not len(validation_p):
        return None
    grid = OracleGrid(validation_p, config.x_step, prob.x_region, delta,
                      float(np.max(np.linalg.norm(validation_p - prob.p_ref, axis=1))))
    mapping = solution_map(prob, config.x_step, workers=config.workers)
    try:
        return empirical_modulus(mapping, 'calm', prob.p_ref, prob.x_ref, grid, config.workers, zeta)
    except ContractViolation:
        logger.warning("solution grid misses x̄ at p̄ for %s; calm oracle skipped", prob.name)
        return None


def graph_slope(prob: GenEqProblem, schedule: RadiusSchedule) -> SlopeEstimate:
    """Strict outer slope of graph_displacement at (x̄, ȳ), sampled on the graph."""
    return strict_outer_slope(
        lambda z: graph_displacement(prob, *prob.split_graph_point(z)),
        np.concatenate([prob.x_ref, prob.y_ref]),
        schedule,
        metric=prob.graph_metric,
        projector=graph_projector(prob),
    )


def check_calm(prob: GenEqProblem, config: Optional[StabilityConfig] = None) -> CalmReport:
    """
    Check the hypotheses for calmness of the solution map and validate the modulus bound.

    Closedness of the graph is probed on the representation as a whole and
    reported as SampledEvidence.
    """
    config = config or StabilityConfig()
    logger.info("check_calm %s started", prob.name)
    delta_star = config.radius_star(prob)
    schedule = config.schedule
    constants = estimate_perturbation_constants(prob, 'uniform', config.p_points(prob), delta_star)
    slope = graph_slope(prob, schedule)
    nearby_p = np.vstack([prob.p_ref[None, :], config.validation_points(prob)[:2]])
    closed = _lsc_status('ii', prob, prob.p_ref[None, :], schedule, delta_star)
    if not closed.failed:
        closed.note = 'closedness probed on the whole representation, not only near (x̄, ȳ)'
    statuses = [
        HypothesisStatus('i', Status.HOLDS, note='finite-dimensional spaces are complete'),
        closed,
        _constant_status('iii', 'l_F', constants.l_field, constants.diverging_field, constants.witness_field),
        _continuity_status('iv', prob, nearby_p, schedule, delta_star),
        _constant_status('v', 'l_f', constants.l_base, constants.diverging_base, constants.witness_base),
        _slope_status('vi', slope),
    ]
    bound, zeta, empirical, comparison, validated = None, None, None, None, None
    if not any(s.failed for s in statuses):
        bound = constants.total / slope.value if np.isfinite(slope.value) else 0.0
        if not np.isfinite(slope.value):
            statuses[-1].note = 'slope = +inf, so the bound is reported as 0'
        if np.isfinite(slope.value):
            zeta = zeta_calm(slope.value, constants.l_field, constants.l_base, delta_star)
        empirical = _calm_oracle(prob, config, delta_star, zeta)
        if empirical is not None:
            comparison = verdict_compare(bound, empirical, config.slack)
            validated = comparison.passed
    verdict = _verdict(statuses, validated)
    logger.info("check_calm %s finished: %s", prob.name, verdict.value)
    return CalmReport(prob.name, statuses, constants, slope, bound, zeta, empirical, comparison, verdict)


@dataclass
class CoderivativeReport:
    """Calmness via the coderivative constant c[F(p̄,·)](x̄, 0) for a null base."""

    instance: str
    statuses: list[HypothesisStatus]
    constants: PerturbationConstants
    c: SlopeEstimate
    empirical: Optional[EmpiricalEstimate]
    verdict: Verdict


def check_calm_coderivative(prob: GenEqProblem, config: Optional[StabilityConfig] = None) -> CoderivativeReport:
    """
    Calmness test for f ≡ 0: local closedness, an upper Lipschitz inclusion
    and c[F(p̄,·)](x̄, 0) > 0. No modulus bound is produced; the oracle is
    only required to stay finite.
    """
    if not prob.base.null:
        raise ContractViolation("the coderivative test requires the null base f ≡ 0")
    config = config or StabilityConfig()
    logger.info("check_calm_coderivative %s started", prob.name)
    delta_star = config.radius_star(prob)
    constants = estimate_perturbation_constants(prob, 'uniform', config.p_points(prob), delta_star)
    c = c_constant(prob, config.schedule)
    c_status = _slope_status('iv', c)
    c_status.constants = {'c': c.value, 'levels': c.values}
    closed = _lsc_status('ii', prob, prob.p_ref[None, :], config.schedule, delta_star)
    statuses = [
        HypothesisStatus('i', Status.HOLDS, note='finite-dimensional spaces are Asplund'),
        closed,
        _constant_status('iii', 'l_F', constants.l_field, constants.diverging_field, constants.witness_field),
        c_status,
    ]
    empirical, validated = None, None
    if not any(s.failed for s in statuses):
        empirical = _calm_oracle(prob, config, delta_star)
        if empirical is not None:
            validated = bool(np.isfinite(empirical.value))
    verdict = _verdict(statuses, validated)
    logger.info("check_calm_coderivative %s finished: %s", prob.name, verdict.value)
    return CoderivativeReport(prob.name, statuses, constants, c, empirical, verdict)


@dataclass
class SmoothBaseLevel:
    epsilon: float
    qualifying: int
    worst_margin: float
    passed: bool


@dataclass
class SmoothBaseReport:
    """Jacobian-versus-coderivative condition at each radius level."""

    instance: str
    gamma: float
    status: HypothesisStatus
    levels: list[SmoothBaseLevel]
    outer_norm_exact: bool

    @property
    def verdict(self) -> Verdict:
        return Verdict.FAIL if self.status.failed else Verdict.PASS


def _adjoint_lower_bound(jacobian: np.ndarray) -> float:
    """inf over unit y* of ‖Jᵀy*‖, the smallest singular value of Jᵀ."""
    dim_y, dim_x = jacobian.shape
    if dim_y > dim_x:
        return 0.0
    return float(np.linalg.svd(jacobian, compute_uv=False).min())


def check_calm_smooth_base(prob: GenEqProblem, gamma: float, schedule: Optional[RadiusSchedule] = None) -> SmoothBaseReport:
    """
    Sweep graph points (x, y) with 0 < d(f(p̄,x), y) <= ε and test
    σ_min(∇f(p̄,x)ᵀ) > (1+γ)·‖D̂*F(p̄,·)(x,y)‖₊ + γ.

    The condition Holds when it passes at every qualifying sample of some
    level; a level without qualifying samples is not counted.
    """
    if prob.base.jacobian_x is None:
        raise Unsupported("the smooth-base test needs the x-Jacobian of f")
    if not gamma > 0:
        raise ContractViolation(f"gamma must be positive, got {gamma}")
    schedule = schedule or RadiusSchedule()
    p_bar = prob.p_ref
    levels, exact_all, failure = [], True, None
    for level, eps in enumerate(schedule.radii):
        seed = schedule.level_seed(level)
        xs = ball_points(prob.x_ref, eps, schedule.samples_per_level, seed)
        offsets = ball_points(np.zeros(prob.dim_y), eps, schedule.samples_per_level, seed + 1)
        count, worst = 0, float('inf')
        for x, offset in zip(xs, offsets):
            image = prob.base(p_bar, x)
            try:
                y = prob.field(p_bar, x).project(image + offset)
            except NoProjection:
                continue
            gap = prob.y_metric.distance(image, y)
            if not 0 < gap <= eps:
                continue
            count += 1
            sigma = _adjoint_lower_bound(prob.base.jacobian(p_bar, x))
            generators = normal_cone_generators(prob.field.graph_at(p_bar, x, y), np.concatenate([x, y]))
            norm, exact = outer_norm(generators, prob.dim_x, prob.dim_y, seed=schedule.seed)
            exact_all = exact_all and exact
            margin = sigma - ((1 + gamma) * norm + gamma)
            if margin < worst:
                worst = margin
                if margin <= 0:
                    failure = {'x': x.tolist(), 'y': y.tolist(), 'sigma': sigma, 'outer_norm': norm, 'epsilon': eps}
        levels.append(SmoothBaseLevel(eps, count, worst, count > 0 and worst > 0))
    if not exact_all:
        logger.warning("outer norms of %s were sampled over unit y* directions", prob.name)
    if any(lv.passed for lv in levels):
        status = HypothesisStatus('smooth', Status.HOLDS, {'gamma': gamma})
    elif all(lv.qualifying == 0 for lv in levels):
        status = HypothesisStatus('smooth', Status.HOLDS, {'gamma': gamma}, note='no qualifying graph points')
    else:
        status = HypothesisStatus('smooth', Status.FAILS, {'gamma': gamma}, failure or {'levels': len(levels)},
                                  note='adjoint Jacobian bound does not dominate the coderivative norm')
    return SmoothBaseReport(prob.name, gamma, status, levels, exact_all)


# ============================================================================
# Descent tracker
# ============================================================================

@dataclass(frozen=True)
class TrackerConfig:
    """Descent threshold c, step schedule and stopping rules of the tracker."""

    c: float
    initial_step: Optional[float] = None
    decay: float = 0.5
    step_floor: float = 1e-8
    max_iterations: int = 10_000
    tol_solution: float = Config.TRACKER_TOL
    delta_star: Optional[float] = None
    directions: int = 16
    seed: int = Config.SEED

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise ContractViolation(f"descent threshold c must be positive, got {self.c}")
        if not 0 < self.decay < 1 or not self.step_floor >= 1e-8:
            raise ContractViolation("steps must decrease to a floor of at least 1e-8")


@dataclass
class TrackerCertificate:
    x_hat: list[float]
    psi: float
    distance: float
    bound: float
    within_bound: bool
    iterations: int
    trace: list[dict]


def _descent_direction(psi, x: np.ndarray, h: float) -> Optional[np.ndarray]:
    grad = np.array([(psi(x + h * e) - psi(x - h * e)) / (2 * h) for e in np.eye(x.size)])
    norm = np.linalg.norm(grad)
    if not np.isfinite(norm) or norm == 0:
        return None
    return -grad / norm


def ekeland_track(prob: GenEqProblem, p, config: TrackerConfig) -> tuple[np.ndarray, TrackerCertificate]:
    """
    Descend ψ(p,·) from x̄ inside B(x̄, δ*) with the acceptance rule
    ψ(p,z) <= ψ(p,x) - c·d(z,x).

    Returns:
        (x̂, certificate); the certificate compares d(x̂,x̄) with
        (d(f(p,x̄),ȳ) + dist(ȳ, F(p,x̄)))/c. The numerator is the measured
        perturbation at x̄ and never exceeds (l_f + l_F)·d(p,p̄), so this bound
        is at least as tight as the one built from the constants.

    Raises:
        NoSolutionFound: when the step floor or iteration cap is reached with ψ > tol
    """
    p = as_vector(p, prob.dim_p, 'p')
    if not prob.p_region.contains(p):
        raise ContractViolation("p lies outside the parameter region")
    delta_star = config.delta_star if config.delta_star is not None else prob.region_radius / 2
    step = config.initial_step if config.initial_step is not None else delta_star / 2
    directions = list(ball_directions(prob.dim_x, config.directions, config.seed))
    directions += [sign * e for e in np.eye(prob.dim_x) for sign in (1.0, -1.0)]

    def psi(z: np.ndarray) -> float:
        return displacement(prob, p, z)

    x = prob.x_ref.copy()
    value = psi(x)
    iterations = 0
    trace = [{'iteration': 0, 'psi': value, 'distance': 0.0}]
    while value > config.tol_solution:
        if step < config.step_floor or iterations >= config.max_iterations:
            raise NoSolutionFound(
                f"tracker stalled on {prob.name} at p={p.tolist()} with ψ={value:.3e}", trace)
        candidates = [x + step * d for d in directions]
        steepest = _descent_direction(psi, x, min(step, 1e-6))
        if steepest is not None:
            candidates.append(x + step * steepest)
        for d in ([steepest] if steepest is not None else []) + directions:
            probe = psi(x + step * d)
            drop = value - probe
            if drop > 0 and np.isfinite(drop):
                candidates.append(x + min(step * value / drop, delta_star) * d)
        best, best_value = None, value
        for z in candidates:
            if np.linalg.norm(z - prob.x_ref) > delta_star:
                continue
            candidate_value = psi(z)
            if candidate_value <= value - config.c * float(np.linalg.norm(z - x)) and candidate_value < best_value:
                best, best_value = z, candidate_value
        if best is None:
            step *= config.decay
            continue
        x, value = best, best_value
        iterations += 1
        trace.append({'iteration': iterations, 'psi': value, 'distance': float(np.linalg.norm(x - prob.x_ref))})
        logger.debug("tracker %s iteration %d: ψ=%.3e step=%.3e", prob.name, iterations, value, step)
    gap = prob.y_metric.distance(prob.base(p, prob.x_ref), prob.y_ref) + dist_to_set(prob.y_ref, prob.field(p, prob.x_ref))
    bound = gap / config.c
    distance = float(np.linalg.norm(x - prob.x_ref))
    certificate = TrackerCertificate(
        x_hat=x.tolist(),
        psi=value,
        distance=distance,
        bound=bound,
        within_bound=distance <= bound + Config.TOL_SOLUTION,
        iterations=iterations,
        trace=trace,
    )
    return x, certificate
