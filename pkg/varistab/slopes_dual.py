"""Slope estimators and exact dual objects for catalog functions and polyhedral graphs."""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from config import Config
from varistab.errors import ContractViolation, DomainError, NotOnGraph, Unsupported
from varistab.metric_core import (
    ACTIVE_TOL,
    GRID_DECIMALS,
    ClosedSet,
    MetricSpec,
    as_vector,
    ball_directions,
    ball_points,
    cone_extreme_rays,
)

logger = logging.getLogger(__name__)

ScalarFn = Callable[[np.ndarray], float]
Projector = Callable[[np.ndarray], np.ndarray]

MONOTONE_TOL = 0.02
INNER_FRACTION = 1e-2
INNER_SEED_OFFSET = 104_729
STEEPEST_FRACTIONS = (1.0, 0.1, 0.01)


@dataclass(frozen=True)
class RadiusSchedule:
    """Radii ε_k = ε₀ρᵏ, k < levels, with a fixed sample budget per level."""

    eps0: float = Config.EPS0
    decay: float = Config.DECAY
    levels: int = Config.LEVELS
    samples_per_level: int = Config.SAMPLES_PER_LEVEL
    seed: int = Config.SEED

    def __post_init__(self) -> None:
        if not self.eps0 > 0:
            raise ContractViolation(f"eps0 must be positive, got {self.eps0}")
        if not 0 < self.decay < 1:
            raise ContractViolation(f"decay must lie in (0, 1), got {self.decay}")
        if self.levels < 3:
            raise ContractViolation(f"at least 3 levels are required, got {self.levels}")
        if self.samples_per_level < 64:
            raise ContractViolation(f"at least 64 samples per level are required, got {self.samples_per_level}")

    @property
    def radii(self) -> tuple[float, ...]:
        return tuple(self.eps0 * self.decay**k for k in range(self.levels))

    @property
    def finest(self) -> float:
        return self.radii[-1]

    def level_seed(self, level: int) -> int:
        return self.seed + 7919 * (level + 1)


@dataclass
class SlopeEstimate:
    """Per-level slope values; the reported value is the finest level."""

    radii: list[float]
    values: list[float]
    value: float
    monotone: bool
    local_min: bool = False
    empty_levels: list[int] = field(default_factory=list)
    witnesses: list[Optional[list[float]]] = field(default_factory=list)
    sampled: bool = True

    @property
    def positive(self) -> bool:
        return positive_limit(self.values)


def positive_limit(values: Sequence[float], floor: float = 1e-6) -> bool:
    """
    Whether a per-level sequence stays bounded away from zero.

    +inf levels (empty infima) count as positive. A finite finest value must
    exceed `floor` and keep at least half of the coarsest finite value.
    """
    finite = [v for v in values if np.isfinite(v)]
    if not finite or not np.isfinite(values[-1]):
        return True
    if values[-1] <= floor:
        return False
    return values[-1] >= 0.5 * finite[0]


def _is_monotone(values: Sequence[float], increasing: Optional[bool]) -> bool:
    steps = [(a, b) for a, b in zip(values, values[1:]) if np.isfinite(a) and np.isfinite(b)]
    rising = all(b >= a - MONOTONE_TOL for a, b in steps)
    falling = all(b <= a + MONOTONE_TOL for a, b in steps)
    if increasing is None:
        return rising or falling
    return rising if increasing else falling


# ============================================================================
# Strong slope and its strict outer variants
# ============================================================================

def _steepest_candidates(g: ScalarFn, x: np.ndarray, radius: float, metric: MetricSpec) -> list[np.ndarray]:
    """Candidates along finite-difference steepest descent directions, per metric block."""
    h = radius * 1e-3
    grad = np.zeros(x.size)
    for i in range(x.size):
        step = np.zeros(x.size)
        step[i] = h
        grad[i] = (g(x + step) - g(x - step)) / (2 * h)
    if not np.all(np.isfinite(grad)) or np.linalg.norm(grad) == 0:
        return []
    directions = [-grad / metric.norm(grad)]
    start = 0
    for block in metric.blocks:
        part = np.zeros(x.size)
        part[start:start + block] = -grad[start:start + block]
        if np.linalg.norm(part) > 0:
            directions.append(part / metric.norm(part))
        start += block
    return [x + radius * frac * d for d in directions for frac in STEEPEST_FRACTIONS]


def _local_slope(g: ScalarFn, x: np.ndarray, gx: float, radius: float, count: int, seed: int,
                 metric: MetricSpec, projector: Optional[Projector]) -> tuple[float, bool]:
    """Largest sampled descent quotient at x within the given radius; also reports if any descent exists."""
    evaluate = g if projector is None else (lambda z: g(projector(z)))
    candidates = list(ball_points(x, radius, count, seed, metric))
    candidates.extend(_steepest_candidates(evaluate, x, radius, metric))
    best, descended = 0.0, False
    for z in candidates:
        if projector is not None:
            z = projector(z)
        dist = metric.distance(z, x)
        if dist <= 0:
            continue
        gz = g(z)
        if gz < gx:
            descended = True
            best = max(best, (gx - gz) / dist)
    return best, descended


def strong_slope(g: ScalarFn, x, schedule: RadiusSchedule, metric: Optional[MetricSpec] = None,
                 projector: Optional[Projector] = None) -> SlopeEstimate:
    """
    Sampled strong slope limsup (g(x) - g(z))⁺ / d(z, x) as z → x.

    Args:
        g: Scalar function, +inf off its domain
        x: Base point
        schedule: Radii and sample budget
        metric: Metric on the domain (Euclidean by default)
        projector: Optional map of candidates onto dom g

    Returns:
        SlopeEstimate; local_min is set when the finest level finds no descent
    """
    x = as_vector(x)
    metric = metric or MetricSpec.euclidean(x.size)
    gx = float(g(x))
    if not np.isfinite(gx):
        raise DomainError(f"strong slope needs a finite value at x, got {gx}")
    values, descended = [], False
    for level, radius in enumerate(schedule.radii):
        best, descended = _local_slope(g, x, gx, radius, schedule.samples_per_level,
                                       schedule.level_seed(level), metric, projector)
        values.append(best)
    local_min = not descended
    return SlopeEstimate(
        radii=list(schedule.radii),
        values=values,
        value=0.0 if local_min else values[-1],
        monotone=_is_monotone(values, None),
        local_min=local_min,
    )


def _outer_levels(schedule: RadiusSchedule, points_for_level, slope_at) -> SlopeEstimate:
    """Shared loop of the strict outer slope estimators."""
    values, witnesses, empty = [], [], []
    for level, eps in enumerate(schedule.radii):
        best, witness = np.inf, None
        for point in points_for_level(level, eps):
            slope = slope_at(point, eps)
            if slope is not None and slope < best:
                best, witness = slope, point
        values.append(float(best))
        witnesses.append(None if witness is None else np.concatenate([np.atleast_1d(w) for w in witness]).tolist()
                         if isinstance(witness, tuple) else witness.tolist())
        if not np.isfinite(best):
            empty.append(level)
            logger.warning("no qualifying point at level %d (eps=%.3g); infimum is +inf", level, eps)
    monotone = _is_monotone(values, True)
    if not monotone:
        logger.warning("strict outer slope levels are not nondecreasing: %s", values)
    logger.debug("strict outer slope levels: %s", values)
    return SlopeEstimate(
        radii=list(schedule.radii),
        values=values,
        value=values[-1],
        monotone=monotone,
        empty_levels=empty,
        witnesses=witnesses,
    )


def strict_outer_slope(g: ScalarFn, x_bar, schedule: RadiusSchedule, metric: Optional[MetricSpec] = None,
                       projector: Optional[Projector] = None) -> SlopeEstimate:
    """
    Sampled strict outer slope of g at x̄.

    Per level ε, the infimum of strong slopes over sampled x ∈ B(x̄, ε)
    with g(x̄) < g(x) <= g(x̄) + ε; +inf when no sampled point qualifies.
    """
    x_bar = as_vector(x_bar)
    metric = metric or MetricSpec.euclidean(x_bar.size)
    g_bar = float(g(x_bar))
    if not np.isfinite(g_bar):
        raise DomainError(f"strict outer slope needs a finite value at x̄, got {g_bar}")
    inner_count = max(16, schedule.samples_per_level // 2)

    def points_for_level(level: int, eps: float):
        for z in ball_points(x_bar, eps, schedule.samples_per_level, schedule.level_seed(level), metric):
            if projector is not None:
                z = projector(z)
                if metric.distance(z, x_bar) > eps:
                    continue
            yield z

    def slope_at(z: np.ndarray, eps: float) -> Optional[float]:
        gz = float(g(z))
        if not g_bar < gz <= g_bar + eps:
            return None
        slope, _ = _local_slope(g, z, gz, eps * INNER_FRACTION, inner_count,
                                schedule.seed + INNER_SEED_OFFSET, metric, projector)
        return slope

    return _outer_levels(schedule, points_for_level, slope_at)


def partial_strict_outer_slope_x(psi: Callable[[np.ndarray, np.ndarray], float], p_bar, x_bar,
                                 schedule: RadiusSchedule, p_metric: Optional[MetricSpec] = None,
                                 x_metric: Optional[MetricSpec] = None) -> SlopeEstimate:
    """
    Strict outer slope of ψ in x, qualifying over (p, x) ∈ B(p̄,ε) × B(x̄,ε).

    The inner strong slope at (p, x) moves x only, with p frozen.
    """
    p_bar = as_vector(p_bar, name='p_bar')
    x_bar = as_vector(x_bar, name='x_bar')
    p_metric = p_metric or MetricSpec.euclidean(p_bar.size)
    x_metric = x_metric or MetricSpec.euclidean(x_bar.size)
    base = float(psi(p_bar, x_bar))
    if not np.isfinite(base):
        raise DomainError(f"partial slope needs a finite value at (p̄, x̄), got {base}")
    count = schedule.samples_per_level
    inner_count = max(16, count // 2)

    def points_for_level(level: int, eps: float):
        seed = schedule.level_seed(level)
        ps = ball_points(p_bar, eps, count, seed, p_metric)
        xs = ball_points(x_bar, eps, count, seed + 1, x_metric)
        for p, x in zip(ps, xs):
            yield (p, x)
        for x in xs:
            yield (p_bar, x)

    def slope_at(pair, eps: float) -> Optional[float]:
        p, x = pair
        value = float(psi(p, x))
        if not base < value <= base + eps:
            return None
        slope, _ = _local_slope(lambda z: psi(p, z), x, value, eps * INNER_FRACTION, inner_count,
                                schedule.seed + INNER_SEED_OFFSET, x_metric, None)
        return slope

    return _outer_levels(schedule, points_for_level, slope_at)


# ============================================================================
# Subdifferential representations
# ============================================================================

@dataclass(frozen=True, eq=False)
class SubdifferentialRep:
    """Closed convex set conv(vertices) + cone(rays) in the dual space."""

    kind: str
    vertices: np.ndarray
    rays: np.ndarray
    in_domain: bool = True

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @classmethod
    def empty(cls, dim: int, in_domain: bool = True) -> 'SubdifferentialRep':
        return cls('empty', np.zeros((0, dim)), np.zeros((0, dim)), in_domain)

    @classmethod
    def singleton(cls, vector) -> 'SubdifferentialRep':
        vec = np.atleast_1d(np.asarray(vector, dtype=float))
        return cls('singleton', vec[None, :], np.zeros((0, vec.size)))

    @classmethod
    def interval_box(cls, lower, upper) -> 'SubdifferentialRep':
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        corners = np.array(np.meshgrid(*[np.unique([lo, hi]) for lo, hi in zip(lower, upper)],
                                       indexing='ij')).reshape(lower.size, -1).T
        return cls('interval_box', corners, np.zeros((0, lower.size)))

    @classmethod
    def cone(cls, generators, dim: int) -> 'SubdifferentialRep':
        gens = np.asarray(generators, dtype=float).reshape(-1, dim)
        return cls('cone', np.zeros((1, dim)), _canonical_rays(gens))

    @classmethod
    def polytope(cls, vertices) -> 'SubdifferentialRep':
        verts = _canonical_points(np.atleast_2d(np.asarray(vertices, dtype=float)))
        if verts.shape[0] == 1:
            return cls.singleton(verts[0])
        return cls('polytope', verts, np.zeros((0, verts.shape[1])))

    @classmethod
    def general(cls, vertices: np.ndarray, rays: np.ndarray) -> 'SubdifferentialRep':
        dim = vertices.shape[1]
        verts = _canonical_points(vertices) if vertices.shape[0] else vertices
        rays = _canonical_rays(rays) if rays.shape[0] else np.zeros((0, dim))
        if verts.shape[0] == 0:
            return cls.empty(dim)
        if rays.shape[0] == 0:
            return cls.polytope(verts)
        if verts.shape[0] == 1 and np.allclose(verts[0], 0):
            return cls('cone', verts, rays)
        return cls('polyhedron', verts, rays)

    def is_empty(self) -> bool:
        return self.vertices.shape[0] == 0

    @property
    def lower(self) -> np.ndarray:
        return self.vertices.min(axis=0)

    @property
    def upper(self) -> np.ndarray:
        return self.vertices.max(axis=0)

    def scaled(self, factor: float) -> 'SubdifferentialRep':
        if factor <= 0:
            raise ContractViolation("only positive scalings preserve the representation")
        return SubdifferentialRep(self.kind, self.vertices * factor, self.rays.copy(), self.in_domain)

    def minkowski_sum(self, other: 'SubdifferentialRep') -> 'SubdifferentialRep':
        if self.is_empty() or other.is_empty():
            return SubdifferentialRep.empty(self.dim, self.in_domain and other.in_domain)
        sums = (self.vertices[:, None, :] + other.vertices[None, :, :]).reshape(-1, self.dim)
        return SubdifferentialRep.general(sums, np.vstack([self.rays, other.rays]))

    def contains(self, vector, tol: float = 1e-9) -> bool:
        if self.is_empty():
            return False
        vec = np.asarray(vector, dtype=float)
        m, r = self.vertices.shape[0], self.rays.shape[0]
        a_eq = np.vstack([np.hstack([self.vertices.T, self.rays.T]),
                          np.hstack([np.ones(m), np.zeros(r)])[None, :]])
        b_eq = np.concatenate([vec, [1.0]])
        # Minimize the L1 residual of the representation
        n = vec.size + 1
        cost = np.concatenate([np.zeros(m + r), np.ones(2 * n)])
        a_full = np.hstack([a_eq, np.eye(n), -np.eye(n)])
        result = linprog(cost, A_eq=a_full, b_eq=b_eq, bounds=[(0, None)] * (m + r + 2 * n), method='highs')
        return result.status == 0 and result.fun <= tol

    def min_norm(self, metric: Optional[MetricSpec] = None) -> float:
        """Smallest dual norm of an element; +inf when empty."""
        if self.is_empty():
            return float('inf')
        metric = metric or MetricSpec.euclidean(self.dim)
        vertex_best = min(metric.dual_norm(v) for v in self.vertices)
        if self.rays.shape[0] == 0 and self.vertices.shape[0] == 1:
            return vertex_best
        if self.contains(np.zeros(self.dim)):
            return 0.0
        return min(vertex_best, _min_norm_program(self.vertices, self.rays, metric))


def _canonical_points(points: np.ndarray) -> np.ndarray:
    return np.unique(np.round(points, GRID_DECIMALS) + 0.0, axis=0)


def _canonical_rays(rays: np.ndarray) -> np.ndarray:
    if rays.shape[0] == 0:
        return rays
    norms = np.linalg.norm(rays, axis=1)
    keep = norms > 1e-12
    if not np.any(keep):
        return np.zeros((0, rays.shape[1]))
    return np.unique(np.round(rays[keep] / norms[keep, None], GRID_DECIMALS) + 0.0, axis=0)


def _min_norm_program(vertices: np.ndarray, rays: np.ndarray, metric: MetricSpec) -> float:
    """Minimum dual norm over conv(vertices) + cone(rays) by SLSQP."""
    m, r = vertices.shape[0], rays.shape[0]
    basis = np.vstack([vertices, rays]) if r else vertices

    def point(z: np.ndarray) -> np.ndarray:
        return basis.T @ z[:m + r]

    start = np.concatenate([np.full(m, 1.0 / m), np.zeros(r)])
    constraints = [{'type': 'eq', 'fun': lambda z: np.sum(z[:m]) - 1.0}]
    bounds = [(0.0, None)] * (m + r)
    if len(metric.blocks) == 1:
        result = minimize(lambda z: float(point(z) @ point(z)), start, method='SLSQP',
                          bounds=bounds, constraints=constraints, options={'ftol': 1e-14, 'maxiter': 500})
        z = result.x
    else:
        offsets = np.cumsum((0,) + metric.blocks)
        for lo, hi in zip(offsets[:-1], offsets[1:]):
            constraints.append({'type': 'ineq',
                                'fun': lambda z, lo=lo, hi=hi: z[-1]**2 - float(np.sum(point(z)[lo:hi]**2))})
        start = np.concatenate([start, [metric.dual_norm(point(start))]])
        result = minimize(lambda z: z[-1], start, method='SLSQP', bounds=bounds + [(0.0, None)],
                          constraints=constraints, options={'ftol': 1e-14, 'maxiter': 500})
        z = result.x[:-1]
    weights = np.clip(z[:m + r], 0.0, None)
    if weights[:m].sum() <= 0:
        return float('inf')
    weights[:m] /= weights[:m].sum()
    return metric.dual_norm(basis.T @ weights)


# ============================================================================
# Analytic catalog of functions with exact Fréchet subdifferentials
# ============================================================================

class CatalogFunction:
    """A function whose Fréchet subdifferential is known in closed form."""

    dim: int

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def subdifferential(self, x: np.ndarray) -> SubdifferentialRep:
        raise NotImplementedError

    def projector(self) -> Optional[Projector]:
        """Map onto the domain, when the domain is a proper polyhedron."""
        return None

    def __call__(self, x: np.ndarray) -> float:
        return self.value(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SmoothFunction(CatalogFunction):
    """Differentiable function given with its gradient."""

    fn: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    dim: int

    def value(self, x: np.ndarray) -> float:
        return float(self.fn(x))

    def subdifferential(self, x: np.ndarray) -> SubdifferentialRep:
        return SubdifferentialRep.singleton(self.gradient(x))


@dataclass(frozen=True, eq=False)
class NormOfAffine(CatalogFunction):
    """x ↦ ‖Mx + c‖ for the l1, l∞ or Euclidean norm."""

    matrix: np.ndarray
    offset: np.ndarray
    order: str = 'l1'

    def __post_init__(self) -> None:
        if self.order not in ('l1', 'linf', 'l2'):
            raise ContractViolation(f"unsupported norm order {self.order!r}")
        object.__setattr__(self, 'matrix', np.atleast_2d(np.asarray(self.matrix, dtype=float)))
        object.__setattr__(self, 'offset', np.atleast_1d(np.asarray(self.offset, dtype=float)))

    @classmethod
    def absolute(cls, dim: int = 1, order: str = 'l1') -> 'NormOfAffine':
        """‖x‖ itself; in one dimension every order gives |x|."""
        return cls(np.eye(dim), np.zeros(dim), order)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def _inner(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x + self.offset

    def value(self, x: np.ndarray) -> float:
        inner = self._inner(x)
        return float({'l1': np.sum(np.abs(inner)), 'linf': np.max(np.abs(inner)),
                      'l2': np.linalg.norm(inner)}[self.order])

    def _identity(self) -> bool:
        return self.matrix.shape[0] == self.matrix.shape[1] and np.allclose(self.matrix, np.eye(self.dim))

    def subdifferential(self, x: np.ndarray) -> SubdifferentialRep:
        inner = self._inner(x)
        k = inner.size
        if self.order == 'l1' or (self.order == 'l2' and k == 1):
            kink = np.abs(inner) <= ACTIVE_TOL
            signs = np.sign(inner)
            lower = np.where(kink, -1.0, signs)
            upper = np.where(kink, 1.0, signs)
            box = SubdifferentialRep.interval_box(lower, upper)
            if self._identity():
                return box
            return SubdifferentialRep.polytope(box.vertices @ self.matrix)
        if self.order == 'l2':
            length = np.linalg.norm(inner)
            if length <= ACTIVE_TOL:
                raise Unsupported("the Euclidean norm at its kink has a non-polyhedral subdifferential")
            return SubdifferentialRep.singleton(self.matrix.T @ (inner / length))
        peak = np.max(np.abs(inner))
        if peak <= ACTIVE_TOL:
            faces = np.vstack([np.eye(k), -np.eye(k)])
        else:
            faces = np.array([np.sign(inner[i]) * np.eye(k)[i] for i in range(k)
                              if abs(inner[i]) >= peak - ACTIVE_TOL])
        return SubdifferentialRep.polytope(faces @ self.matrix)


@dataclass(frozen=True)
class MaxOfSmooth(CatalogFunction):
    """Pointwise maximum of finitely many smooth functions."""

    pieces: tuple[SmoothFunction, ...]

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    def value(self, x: np.ndarray) -> float:
        return max(piece.value(x) for piece in self.pieces)

    def subdifferential(self, x: np.ndarray) -> SubdifferentialRep:
        values = np.array([piece.value(x) for piece in self.pieces])
        active = [piece for piece, v in zip(self.pieces, values) if v >= values.max() - ACTIVE_TOL]
        return SubdifferentialRep.polytope(np.array([piece.gradient(x) for piece in active]))


@dataclass(frozen=True, eq=False)
class PolyhedronIndicator(CatalogFunction):
    """Indicator of a polyhedral closed set: 0 inside, +inf outside."""

    polyhedron: ClosedSet

    def __post_init__(self) -> None:
        if not self.polyhedron.polyhedral:
            raise Unsupported("indicator requires a polyhedral set")

    @property
    def dim(self) -> int:
        return self.polyhedron.dim

    def value(self, x: np.ndarray) -> float:
        return 0.0 if self.polyhedron.contains(x) else float('inf')

    def subdifferential(self, x: np.ndarray) -> SubdifferentialRep:
        if not self.polyhedron.contains(x):
            return SubdifferentialRep.empty(self.dim, in_domain=False)
        return SubdifferentialRep.cone(self.polyhedron.normal_generators(x), self.dim)

    def projector(self) -> Optional[Projector]:
        return self.polyhedron.project


@dataclass(frozen=True)
class SumFunction(CatalogFunction):
    """Finite sum of catalog functions; subdifferentials add exactly on this catalog."""

    terms: tuple[CatalogFunction, ...]

    @property
    def dim(self) -> int:
        return self.terms[0].dim

    def value(self, x: np.ndarray) -> float:
        return float(sum(term.value(x) for term in self.terms))

    def subdifferential(self, x: np.ndarray) -> SubdifferentialRep:
        total = self.terms[0].subdifferential(x)
        for term in self.terms[1:]:
            total = total.minkowski_sum(term.subdifferential(x))
        return total

    def projector(self) -> Optional[Projector]:
        projectors = [t.projector() for t in self.terms if t.projector() is not None]
        if len(projectors) > 1:
            raise Unsupported("sums with more than one indicator have no domain projector")
        return projectors[0] if projectors else None


def frechet_subdifferential(fn: CatalogFunction, x) -> SubdifferentialRep:
    """
    Exact Fréchet subdifferential of a catalog function.

    Points outside the domain give an empty representation with
    in_domain=False.
    """
    if not isinstance(fn, CatalogFunction):
        raise Unsupported(f"{type(fn).__name__} is not a catalog function")
    return fn.subdifferential(as_vector(x, fn.dim, 'x'))


def strict_outer_subdif_slope(fn: CatalogFunction, x_bar, schedule: RadiusSchedule,
                              metric: Optional[MetricSpec] = None) -> SlopeEstimate:
    """
    Per level ε, inf of ‖x*‖ over x* ∈ ∂̂fn(x) at qualifying x near x̄.

    Finite-dimensional spaces are Asplund, so this agrees with
    strict_outer_slope on lower semicontinuous catalog functions.
    """
    if not isinstance(fn, CatalogFunction):
        raise Unsupported(f"{type(fn).__name__} is not a catalog function")
    x_bar = as_vector(x_bar, fn.dim, 'x_bar')
    metric = metric or MetricSpec.euclidean(fn.dim)
    g_bar = fn.value(x_bar)
    if not np.isfinite(g_bar):
        raise DomainError(f"subdifferential slope needs a finite value at x̄, got {g_bar}")
    projector = fn.projector()

    def points_for_level(level: int, eps: float):
        for z in ball_points(x_bar, eps, schedule.samples_per_level, schedule.level_seed(level), metric):
            if projector is not None:
                z = projector(z)
                if metric.distance(z, x_bar) > eps:
                    continue
            yield z

    def slope_at(z: np.ndarray, eps: float) -> Optional[float]:
        gz = fn.value(z)
        if not g_bar < gz <= g_bar + eps:
            return None
        return fn.subdifferential(z).min_norm(metric)

    estimate = _outer_levels(schedule, points_for_level, slope_at)
    estimate.sampled = True
    return estimate


# ============================================================================
# Normal cones and coderivatives of polyhedral graphs
# ============================================================================

@dataclass
class CoderivativeResult:
    """D̂*Φ(x,y)(y*) as a polyhedral x*-set, with the outer norm at the point."""

    y_star: np.ndarray
    x_stars: SubdifferentialRep
    outer_norm: float
    outer_norm_exact: bool


def normal_cone_generators(graph: ClosedSet, point, tol: float = Config.TOL_FEAS) -> np.ndarray:
    """Generators of the Fréchet normal cone to the graph at a graph point."""
    point = as_vector(point, graph.dim, 'graph point')
    if graph.distance(point) > tol:
        raise NotOnGraph(f"point {point.tolist()} is not on the graph")
    return graph.normal_generators(point)


def coderivative_slice(generators: np.ndarray, dim_x: int, y_star: np.ndarray) -> SubdifferentialRep:
    """
    {x* : (x*, -y*) ∈ cone(generators)} via basic feasible solutions.

    Vertices come from supports with independent y-columns, rays from
    the extreme rays of the y-homogeneous system.
    """
    y_star = np.atleast_1d(np.asarray(y_star, dtype=float))
    target = -y_star
    m = generators.shape[0]
    if m == 0:
        if np.linalg.norm(y_star) <= ACTIVE_TOL:
            return SubdifferentialRep.singleton(np.zeros(dim_x))
        return SubdifferentialRep.empty(dim_x)
    gx, gy = generators[:, :dim_x], generators[:, dim_x:]
    scale = 1.0 + np.linalg.norm(target)
    vertices = []
    if np.linalg.norm(target) <= ACTIVE_TOL:
        vertices.append(np.zeros(dim_x))
    for size in range(1, min(m, gy.shape[1]) + 1):
        for support in combinations(range(m), size):
            columns = gy[list(support)].T
            if np.linalg.matrix_rank(columns) < size:
                continue
            mu, *_ = np.linalg.lstsq(columns, target, rcond=None)
            if np.linalg.norm(columns @ mu - target) > 1e-9 * scale or np.any(mu < -1e-12):
                continue
            vertices.append(gx[list(support)].T @ np.clip(mu, 0.0, None))
    if not vertices:
        return SubdifferentialRep.empty(dim_x)
    homogeneous = cone_extreme_rays(gy.T)
    rays = homogeneous @ gx if homogeneous.shape[0] else np.zeros((0, dim_x))
    return SubdifferentialRep.general(np.array(vertices), rays)


def outer_norm(generators: np.ndarray, dim_x: int, dim_y: int, samples: int = 64,
               seed: int = Config.SEED) -> tuple[float, bool]:
    """
    sup{‖x*‖ : x* ∈ D̂*Φ(x,y)(y*), ‖y*‖ <= 1}; sup over an empty set is 0.

    Exact for one-dimensional Y, otherwise y* runs over sampled unit
    directions and the result is flagged approximate.
    """
    if generators.shape[0]:
        homogeneous = cone_extreme_rays(generators[:, dim_x:].T)
        if homogeneous.shape[0] and np.any(np.linalg.norm(homogeneous @ generators[:, :dim_x], axis=1) > 1e-10):
            return float('inf'), True
    if dim_y == 1:
        directions, exact = np.array([[1.0], [-1.0]]), True
    else:
        directions, exact = ball_directions(dim_y, samples, seed), False
    best = 0.0
    for y_star in directions:
        x_stars = coderivative_slice(generators, dim_x, y_star)
        if not x_stars.is_empty():
            best = max(best, float(np.max(np.linalg.norm(x_stars.vertices, axis=1))))
    return best, exact


def coderivative_at(graph: ClosedSet, point, y_star, dim_x: int) -> CoderivativeResult:
    """
    Fréchet coderivative of a mapping with polyhedral graph in X × Y.

    Args:
        graph: Polyhedral set (or finite union of polyhedra) in X × Y
        point: Graph point (x, y), concatenated
        y_star: Dual vector in Y*
        dim_x: Dimension of X

    Raises:
        NotOnGraph: if the point is not on the graph within tol_feas
    """
    generators = normal_cone_generators(graph, point)
    y_star = as_vector(y_star, graph.dim - dim_x, 'y_star')
    norm, exact = outer_norm(generators, dim_x, graph.dim - dim_x)
    if not exact:
        logger.warning("outer norm sampled over unit y* directions (dim Y = %d)", graph.dim - dim_x)
    return CoderivativeResult(
        y_star=y_star,
        x_stars=coderivative_slice(generators, dim_x, y_star),
        outer_norm=norm,
        outer_norm_exact=exact,
    )


def c_constant(prob, schedule: RadiusSchedule) -> SlopeEstimate:
    """
    c[F(p̄,·)](x̄, 0) for a null-base equation.

    Graph points near (x̄, 0) with y ≠ 0 are reached by projecting sampled
    y onto F(p̄, x); per level the infimum of ‖x*‖ over coderivative
    elements at unit y* is taken. No qualifying element means +inf.
    """
    if not prob.base.null:
        raise ContractViolation("c[F] is defined for null-base equations only")
    p_bar, x_bar = prob.p_ref, prob.x_ref
    dim_x, dim_y = prob.dim_x, prob.dim_y
    count = schedule.samples_per_level
    if dim_y == 1:
        unit_y = np.array([[1.0], [-1.0]])
    else:
        unit_y = ball_directions(dim_y, 16, schedule.seed)

    def points_for_level(level: int, eps: float):
        seed = schedule.level_seed(level)
        xs = np.vstack([x_bar[None, :], ball_points(x_bar, eps, count, seed)])
        ys = ball_points(np.zeros(dim_y), eps, count + 1, seed + 1)
        for x, y in zip(xs, ys):
            values = prob.field(p_bar, x)
            if values.is_empty():
                continue
            on_graph = values.project(y)
            if not ACTIVE_TOL < np.linalg.norm(on_graph) <= eps:
                continue
            yield (x, on_graph)

    def slope_at(pair, eps: float) -> Optional[float]:
        x, y = pair
        model = prob.field.graph_at(p_bar, x, y)
        generators = normal_cone_generators(model, np.concatenate([x, y]))
        best = None
        for y_star in unit_y:
            x_stars = coderivative_slice(generators, dim_x, y_star)
            if not x_stars.is_empty():
                norm = x_stars.min_norm()
                best = norm if best is None else min(best, norm)
        return best

    return _outer_levels(schedule, points_for_level, slope_at)


def partial_strict_outer_subdif_slope_x(descriptor: Callable[[np.ndarray], CatalogFunction], p_bar, x_bar,
                                        schedule: RadiusSchedule) -> SlopeEstimate:
    """
    Per level ε, inf of ‖x*‖ over x* ∈ ∂̂ₓφ(p,x) with (p,x) ∈ B(p̄,ε) × B(x̄,ε)
    and φ(p̄,x̄) < φ(p,x) <= φ(p̄,x̄) + ε, where descriptor(p) describes φ(p,·).
    """
    p_bar = as_vector(p_bar, name='p_bar')
    x_bar = as_vector(x_bar, name='x_bar')
    base = descriptor(p_bar).value(x_bar)
    if not np.isfinite(base):
        raise DomainError(f"partial subdifferential slope needs a finite value at (p̄, x̄), got {base}")
    count = schedule.samples_per_level

    def points_for_level(level: int, eps: float):
        seed = schedule.level_seed(level)
        ps = ball_points(p_bar, eps, count, seed)
        xs = ball_points(x_bar, eps, count, seed + 1)
        for p, x in zip(ps, xs):
            yield (p, x)
        for x in xs:
            yield (p_bar, x)

    def slope_at(pair, eps: float) -> Optional[float]:
        p, x = pair
        fn = descriptor(p)
        value = fn.value(x)
        if not base < value <= base + eps:
            return None
        return fn.subdifferential(x).min_norm()

    return _outer_levels(schedule, points_for_level, slope_at)
