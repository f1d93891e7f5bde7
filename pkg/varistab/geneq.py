"""Parameterized generalized equations f(p,x) ∈ F(p,x) and their displacement functions."""
import logging
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from config import Config
from varistab.errors import ContractViolation, NoProjection, Unsupported
from varistab.metric_core import (
    Box,
    CartesianProduct,
    ClosedSet,
    MetricSpec,
    as_vector,
    ball_directions,
    ball_points,
    box_grid,
    dist_to_set,
    sweep,
)

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]
GraphModel = Callable[[np.ndarray, np.ndarray, np.ndarray], ClosedSet]


@dataclass(frozen=True)
class BaseFn:
    """The base f: P × X → Y, with an optional x-Jacobian."""

    evaluate: Evaluator
    dim_p: int
    dim_x: int
    dim_y: int
    jacobian_x: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    null: bool = False

    @classmethod
    def zero(cls, dim_p: int, dim_x: int, dim_y: int) -> 'BaseFn':
        """The null base f ≡ 0."""
        return cls(
            evaluate=lambda p, x: np.zeros(dim_y),
            dim_p=dim_p,
            dim_x=dim_x,
            dim_y=dim_y,
            jacobian_x=lambda p, x: np.zeros((dim_y, dim_x)),
            null=True,
        )

    def __call__(self, p: np.ndarray, x: np.ndarray) -> np.ndarray:
        value = np.atleast_1d(np.asarray(self.evaluate(p, x), dtype=float))
        if value.shape != (self.dim_y,):
            raise ContractViolation(f"base returned shape {value.shape}, expected ({self.dim_y},)")
        return value

    def jacobian(self, p: np.ndarray, x: np.ndarray) -> np.ndarray:
        if self.jacobian_x is None:
            raise Unsupported("base has no x-Jacobian")
        return np.asarray(self.jacobian_x(p, x), dtype=float).reshape(self.dim_y, self.dim_x)

    def check_jacobian(self, p, x, samples: int = 8, seed: int = 0, h: float = 1e-6) -> float:
        """
        Worst finite-difference residual |J v - (f(p,x+hv) - f(p,x))/h| over sampled unit v.

        A trustworthy Jacobian keeps this below 1e-4.
        """
        p = as_vector(p, self.dim_p, 'p')
        x = as_vector(x, self.dim_x, 'x')
        jac = self.jacobian(p, x)
        base_value = self(p, x)
        worst = 0.0
        for v in ball_directions(self.dim_x, samples, seed):
            difference = (self(p, x + h * v) - base_value) / h
            worst = max(worst, float(np.linalg.norm(jac @ v - difference)))
        return worst


@dataclass(frozen=True)
class FieldFn:
    """The field F: P × X ⇒ Y, closed-valued by representation."""

    evaluate: Callable[[np.ndarray, np.ndarray], ClosedSet]
    dim_y: int
    graph_model: Optional[GraphModel] = None

    @classmethod
    def constant(cls, values: ClosedSet, dim_x: int) -> 'FieldFn':
        """F(p,x) = S for every (p,x); the graph of F(p,·) is X × S."""
        graph = CartesianProduct((Box.whole(dim_x), values))
        return cls(evaluate=lambda p, x: values, dim_y=values.dim, graph_model=lambda p, x, y: graph)

    def __call__(self, p: np.ndarray, x: np.ndarray) -> ClosedSet:
        values = self.evaluate(p, x)
        if values.dim != self.dim_y:
            raise ContractViolation(f"field value has dimension {values.dim}, expected {self.dim_y}")
        return values

    def graph_at(self, p: np.ndarray, x: np.ndarray, y: np.ndarray) -> ClosedSet:
        """Polyhedral model of grph F(p,·) with the same Fréchet normal cone at (x, y)."""
        if self.graph_model is None:
            raise Unsupported("field has no graph model")
        return self.graph_model(p, x, y)


def polyhedral_graph(graph: Callable[[np.ndarray], ClosedSet]) -> GraphModel:
    """Graph model for a field whose graph at p is one polyhedral set."""
    return lambda p, x, y: graph(p)


@dataclass(frozen=True, eq=False)
class GenEqProblem:
    """
    A parameterized generalized equation with a reference solution.

    ȳ = f(p̄, x̄) is computed, never supplied, and x̄ ∈ G(p̄) is enforced.
    """

    name: str
    base: BaseFn
    field: FieldFn
    p_ref: np.ndarray
    x_ref: np.ndarray
    p_region: Box
    x_region: Box
    y_metric: Optional[MetricSpec] = None
    y_region: Optional[Box] = None
    tol_feas: float = Config.TOL_FEAS
    y_ref: np.ndarray = dc_field(init=False)

    def __post_init__(self) -> None:
        if self.field.dim_y != self.base.dim_y:
            raise ContractViolation("base and field disagree on dim Y")
        p_ref = as_vector(self.p_ref, self.base.dim_p, 'p_ref')
        x_ref = as_vector(self.x_ref, self.base.dim_x, 'x_ref')
        if self.p_region.dim != self.base.dim_p or self.x_region.dim != self.base.dim_x:
            raise ContractViolation("search regions must match dim P and dim X")
        if not (self.p_region.contains(p_ref) and self.x_region.contains(x_ref)):
            raise ContractViolation("reference point lies outside the search regions")
        y_metric = self.y_metric or MetricSpec.euclidean(self.base.dim_y)
        if y_metric.dim != self.base.dim_y:
            raise ContractViolation("y_metric dimension differs from dim Y")
        y_ref = self.base(p_ref, x_ref)
        gap = dist_to_set(y_ref, self.field(p_ref, x_ref))
        if gap > self.tol_feas:
            raise ContractViolation(f"reference x is not a solution at p_ref: dist(ȳ, F(p̄,x̄)) = {gap:.3e}")
        object.__setattr__(self, 'p_ref', p_ref)
        object.__setattr__(self, 'x_ref', x_ref)
        object.__setattr__(self, 'y_metric', y_metric)
        object.__setattr__(self, 'y_ref', y_ref)
        if self.y_region is None:
            object.__setattr__(self, 'y_region', Box.around(y_ref, 2.0))

    @property
    def dim_p(self) -> int:
        return self.base.dim_p

    @property
    def dim_x(self) -> int:
        return self.base.dim_x

    @property
    def dim_y(self) -> int:
        return self.base.dim_y

    @property
    def p_metric(self) -> MetricSpec:
        return MetricSpec.euclidean(self.dim_p)

    @property
    def x_metric(self) -> MetricSpec:
        return MetricSpec.euclidean(self.dim_x)

    @property
    def graph_metric(self) -> MetricSpec:
        """Sum metric on X × Y."""
        return MetricSpec.product(self.x_metric, self.y_metric)

    @property
    def region_radius(self) -> float:
        """Largest radius of a ball around x̄ that stays inside the x-region."""
        return float(np.min(np.minimum(self.x_ref - self.x_region.lower, self.x_region.upper - self.x_ref)))

    def split_graph_point(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return z[:self.dim_x], z[self.dim_x:]


@dataclass
class SolutionSample:
    """Grid points x with displacement(p, x) <= tol."""

    p: np.ndarray
    points: np.ndarray
    resolution: float
    tol: float

    def __len__(self) -> int:
        return self.points.shape[0]

    def nearest(self, x: np.ndarray) -> Optional[np.ndarray]:
        if len(self) == 0:
            return None
        return self.points[int(np.argmin(np.linalg.norm(self.points - x, axis=1)))]


@dataclass
class LscCheck:
    """Outcome of the lower semicontinuity probe of ψ(p, ·) at x."""

    holds: bool
    margin: float
    level_deficits: list[float]
    witness: Optional[np.ndarray] = None


def displacement(prob: GenEqProblem, p, x) -> float:
    """ψ(p,x) = dist(f(p,x), F(p,x)); +inf when F(p,x) is empty."""
    p = as_vector(p, prob.dim_p, 'p')
    x = as_vector(x, prob.dim_x, 'x')
    return dist_to_set(prob.base(p, x), prob.field(p, x))


def graph_displacement(prob: GenEqProblem, x, y) -> float:
    """
    disp(x,y) = d(f(p̄,x), y) + indicator of grph F(p̄,·).

    Membership is accepted within tol_feas; off the graph the value is +inf.
    """
    x = as_vector(x, prob.dim_x, 'x')
    y = as_vector(y, prob.dim_y, 'y')
    if dist_to_set(y, prob.field(prob.p_ref, x)) > prob.tol_feas:
        return float('inf')
    return prob.y_metric.distance(prob.base(prob.p_ref, x), y)


def graph_projector(prob: GenEqProblem) -> Callable[[np.ndarray], np.ndarray]:
    """Map (x, y) to (x, proj of y onto F(p̄,x)), a point of the graph."""
    def project(z: np.ndarray) -> np.ndarray:
        x, y = prob.split_graph_point(z)
        try:
            return np.concatenate([x, prob.field(prob.p_ref, x).project(y)])
        except NoProjection:
            return z
    return project


def solve_on_grid(
    prob: GenEqProblem,
    p,
    region: Optional[Box] = None,
    resolution: float = Config.X_STEP,
    tol: float = Config.TOL_SOLUTION,
    workers: int = 1,
    budget: int = Config.GRID_BUDGET,
) -> SolutionSample:
    """
    Brute-force sample of G(p) on a regular grid.

    Args:
        prob: The generalized equation
        p: Parameter value
        region: Box inside the x search region (defaults to all of it)
        resolution: Grid spacing
        tol: Acceptance threshold on the displacement
        workers: Thread cap for the sweep

    Returns:
        SolutionSample with the accepted grid points in grid order
    """
    p = as_vector(p, prob.dim_p, 'p')
    region = region or prob.x_region
    if np.any(region.lower < prob.x_region.lower - 1e-12) or np.any(region.upper > prob.x_region.upper + 1e-12):
        raise ContractViolation("solve region must lie inside the x search region")
    grid = box_grid(region, resolution, budget)
    values = sweep(lambda x: displacement(prob, p, x), list(grid), workers)
    accepted = grid[np.asarray(values, dtype=float) <= tol] if len(values) else grid
    logger.debug("solve_on_grid %s p=%s: %d of %d points", prob.name, p.tolist(), len(accepted), len(grid))
    return SolutionSample(p=p, points=accepted, resolution=resolution, tol=tol)


def displacement_lsc_check(prob: GenEqProblem, p, x, schedule, tol: float = 1e-6) -> LscCheck:
    """
    Probe liminf ψ(p,z) >= ψ(p,x) as z → x.

    The same unit-ball pattern is scaled to every radius of the schedule;
    the worst deficit ψ(p,x) - min ψ(p,z) per level is extrapolated to
    radius 0 by a low-degree polynomial fit, whose intercept is the margin.
    """
    p = as_vector(p, prob.dim_p, 'p')
    x = as_vector(x, prob.dim_x, 'x')
    centre_value = displacement(prob, p, x)
    unit = ball_points(np.zeros(prob.dim_x), 1.0, schedule.samples_per_level, schedule.seed)
    deficits, witness, worst = [], None, -np.inf
    for radius in schedule.radii:
        level = 0.0
        for offset in unit:
            z = x + radius * offset
            gap = centre_value - displacement(prob, p, z)
            if gap > level:
                level = gap
            if gap > worst:
                worst, witness = gap, z
        deficits.append(level)
    radii = np.asarray(schedule.radii)
    degree = min(2, len(radii) - 2)
    intercept = float(np.polyfit(radii, deficits, degree)[-1]) if degree >= 1 else deficits[-1]
    margin = -max(0.0, min(intercept, deficits[-1]))
    holds = deficits[-1] <= tol or margin >= -tol
    if not holds:
        logger.info("ψ(p,·) of %s fails lower semicontinuity at x=%s (margin %.3g)", prob.name, x.tolist(), margin)
    return LscCheck(holds=holds, margin=margin, level_deficits=deficits, witness=witness)
