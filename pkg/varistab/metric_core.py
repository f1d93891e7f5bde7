"""Closed sets, exact distances and projections, and the sum metric."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Callable, ClassVar, Optional, Sequence, TypeVar

import numpy as np
from scipy.optimize import linprog
from scipy.stats import qmc

from config import Config
from varistab.errors import BudgetExceeded, ContractViolation, NoProjection, Unsupported

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

# Activity threshold for constraints when reading off normal cones
ACTIVE_TOL = 1e-8
DYKSTRA_MAX_SWEEPS = 200_000
GRID_DECIMALS = 12


def as_vector(values, dim: Optional[int] = None, name: str = 'point') -> np.ndarray:
    """
    Convert coordinates to a finite 1-d float array.

    Args:
        values: Scalar or sequence of coordinates
        dim: Expected dimension, checked when given
        name: Label used in error messages

    Returns:
        A fresh float array of shape (dim,)
    """
    vec = np.atleast_1d(np.array(values, dtype=float))
    if vec.ndim != 1:
        raise ContractViolation(f"{name} must be one-dimensional, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ContractViolation(f"{name} has non-finite coordinates: {vec.tolist()}")
    if dim is not None and vec.size != dim:
        raise ContractViolation(f"{name} has dimension {vec.size}, expected {dim}")
    return vec


def sweep(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    """Map fn over items, in order, on up to `workers` threads."""
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class MetricSpec:
    """Sum of Euclidean norms over consecutive coordinate blocks."""

    blocks: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.blocks or any(b <= 0 for b in self.blocks):
            raise ContractViolation(f"metric blocks must be positive, got {self.blocks}")

    @classmethod
    def euclidean(cls, dim: int) -> 'MetricSpec':
        return cls((dim,))

    @classmethod
    def product(cls, *specs: 'MetricSpec') -> 'MetricSpec':
        return cls(tuple(b for spec in specs for b in spec.blocks))

    @property
    def dim(self) -> int:
        return sum(self.blocks)

    def split(self, v: np.ndarray) -> list[np.ndarray]:
        return np.split(np.asarray(v, dtype=float), np.cumsum(self.blocks)[:-1])

    def norm(self, v: np.ndarray) -> float:
        return float(sum(np.linalg.norm(part) for part in self.split(v)))

    def distance(self, a: np.ndarray, b: np.ndarray) -> float:
        return self.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))

    def dual_norm(self, v: np.ndarray) -> float:
        """Norm dual to the sum metric: the largest block norm."""
        return float(max(np.linalg.norm(part) for part in self.split(v)))


# ============================================================================
# Cone helpers (polyhedral normal cones are kept as generator lists)
# ============================================================================

def _unit_rows(rows: np.ndarray) -> np.ndarray:
    """Normalize rows, drop zeros and duplicates, sort lexicographically."""
    if rows.shape[0] == 0:
        return rows
    norms = np.linalg.norm(rows, axis=1)
    keep = norms > 1e-12
    rows = rows[keep] / norms[keep, None]
    if rows.shape[0] == 0:
        return rows
    return np.unique(np.round(rows, GRID_DECIMALS) + 0.0, axis=0)


def cone_extreme_rays(matrix: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """
    Extreme rays of the pointed cone {mu >= 0 : matrix @ mu = 0}.

    Extreme rays have minimal support, so every support set is tried whose
    restricted null space is one-dimensional and sign-definite.

    Args:
        matrix: Array of shape (r, m)

    Returns:
        Array of shape (k, m) with one unit ray per row
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    rows, m = matrix.shape
    rank = np.linalg.matrix_rank(matrix) if matrix.size else 0
    rays = []
    for size in range(1, min(m, rank + 1) + 1):
        for support in combinations(range(m), size):
            sub = matrix[:, support]
            _, sing, vt = np.linalg.svd(sub)
            null_dim = size - int(np.sum(sing > tol))
            if null_dim != 1:
                continue
            vec = vt[-1]
            if vec.sum() < 0:
                vec = -vec
            if np.all(vec > tol):
                mu = np.zeros(m)
                mu[list(support)] = vec
                rays.append(mu)
    if not rays:
        return np.zeros((0, m))
    return _unit_rows(np.array(rays))


def intersect_cones(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Generators of cone(first) ∩ cone(second); empty rows mean the cone {0}."""
    if first.shape[0] == 0 or second.shape[0] == 0:
        return np.zeros((0, first.shape[1]))
    system = np.hstack([first.T, -second.T])
    rays = cone_extreme_rays(system)
    gens = rays[:, :first.shape[0]] @ first
    return _unit_rows(gens)


def coordinate_generators(dim: int) -> np.ndarray:
    """Generators ±e_i of the whole space."""
    eye = np.eye(dim)
    return np.vstack([eye, -eye])


# ============================================================================
# Closed set representations
# ============================================================================

class ClosedSet:
    """A closed subset of R^n with an exact distance evaluator."""

    convex: ClassVar[bool] = True
    polyhedral: ClassVar[bool] = False

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def metric(self) -> MetricSpec:
        return MetricSpec.euclidean(self.dim)

    def is_empty(self) -> bool:
        return False

    def distance(self, y: np.ndarray) -> float:
        if self.is_empty():
            return float('inf')
        return self.metric.distance(y, self.project(y))

    def project(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, y: np.ndarray, tol: float = Config.TOL_FEAS) -> bool:
        return self.distance(np.asarray(y, dtype=float)) <= tol

    def bounding_box(self) -> 'Box':
        raise NotImplementedError

    def normal_generators(self, z: np.ndarray, tol: float = ACTIVE_TOL) -> np.ndarray:
        """Generators of the Fréchet normal cone at z (no rows means {0})."""
        raise Unsupported(f"{type(self).__name__} has no polyhedral normal cone")


@dataclass(frozen=True, eq=False)
class FiniteCloud(ClosedSet):
    """Finitely many points, one per row."""

    points: np.ndarray
    polyhedral: ClassVar[bool] = True
    convex: ClassVar[bool] = False

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or not np.all(np.isfinite(pts)):
            raise ContractViolation("cloud points must form a finite 2-d array")
        object.__setattr__(self, 'points', pts)

    @classmethod
    def empty(cls, dim: int) -> 'FiniteCloud':
        return cls(np.zeros((0, dim)))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def is_empty(self) -> bool:
        return self.points.shape[0] == 0

    def distance(self, y: np.ndarray) -> float:
        if self.is_empty():
            return float('inf')
        return float(np.min(np.linalg.norm(self.points - y, axis=1)))

    def project(self, y: np.ndarray) -> np.ndarray:
        return self.points[int(np.argmin(np.linalg.norm(self.points - y, axis=1)))].copy()

    def bounding_box(self) -> 'Box':
        if self.is_empty():
            return Box(np.ones(self.dim), np.zeros(self.dim))
        return Box(self.points.min(axis=0), self.points.max(axis=0))

    def normal_generators(self, z: np.ndarray, tol: float = ACTIVE_TOL) -> np.ndarray:
        # Isolated points: the normal cone is the whole space
        return coordinate_generators(self.dim)


@dataclass(frozen=True, eq=False)
class HalfspaceIntersection(ClosedSet):
    """Polyhedron {x : <a_i, x> <= b_i for every row i}."""

    normals: np.ndarray
    offsets: np.ndarray
    polyhedral: ClassVar[bool] = True

    def __post_init__(self) -> None:
        normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        offsets = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if normals.shape[0] != offsets.size:
            raise ContractViolation("one offset per halfspace normal is required")
        if np.any(np.linalg.norm(normals, axis=1) == 0):
            raise ContractViolation("halfspace normals must be nonzero")
        object.__setattr__(self, 'normals', normals)
        object.__setattr__(self, 'offsets', offsets)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @cached_property
    def _empty(self) -> bool:
        result = linprog(
            np.zeros(self.dim),
            A_ub=self.normals,
            b_ub=self.offsets,
            bounds=[(None, None)] * self.dim,
            method='highs',
        )
        return result.status == 2

    def is_empty(self) -> bool:
        return self._empty

    def violation(self, y: np.ndarray) -> float:
        return float(np.max(self.normals @ y - self.offsets))

    def project(self, y: np.ndarray) -> np.ndarray:
        if self.is_empty():
            raise NoProjection("halfspace intersection is empty")
        y = np.asarray(y, dtype=float)
        if self.violation(y) <= 0:
            return y.copy()
        sq_norms = np.sum(self.normals**2, axis=1)
        if self.normals.shape[0] == 1:
            a, b = self.normals[0], self.offsets[0]
            return y - (a @ y - b) / sq_norms[0] * a
        # Dykstra's alternating projections onto the halfspaces
        x = y.copy()
        increments = np.zeros_like(self.normals)
        for sweep_no in range(DYKSTRA_MAX_SWEEPS):
            previous = x.copy()
            for i, (a, b) in enumerate(zip(self.normals, self.offsets)):
                z = x + increments[i]
                x = z - max(0.0, a @ z - b) / sq_norms[i] * a
                increments[i] = z - x
            if np.linalg.norm(x - previous) <= Config.TOL_PROJ * 1e-3 and self.violation(x) <= Config.TOL_PROJ:
                break
        else:
            logger.warning("Dykstra projection stopped after %d sweeps", DYKSTRA_MAX_SWEEPS)
        return x

    def bounding_box(self) -> 'Box':
        lower, upper = np.full(self.dim, -np.inf), np.full(self.dim, np.inf)
        for axis in range(self.dim):
            for sign, bounds in ((1.0, lower), (-1.0, upper)):
                cost = np.zeros(self.dim)
                cost[axis] = sign
                result = linprog(cost, A_ub=self.normals, b_ub=self.offsets,
                                 bounds=[(None, None)] * self.dim, method='highs')
                if result.status == 0:
                    bounds[axis] = result.x[axis]
        return Box(lower, upper)

    def normal_generators(self, z: np.ndarray, tol: float = ACTIVE_TOL) -> np.ndarray:
        active = self.normals @ z - self.offsets >= -tol
        return self.normals[active].copy()


@dataclass(frozen=True, eq=False)
class ClosedBall(ClosedSet):
    """Euclidean ball {x : |x - center| <= radius}."""

    center: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, 'center', as_vector(self.center, name='center'))
        if not self.radius >= 0:
            raise ContractViolation(f"ball radius must be nonnegative, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.center.size

    def distance(self, y: np.ndarray) -> float:
        return max(0.0, float(np.linalg.norm(y - self.center)) - self.radius)

    def project(self, y: np.ndarray) -> np.ndarray:
        offset = y - self.center
        length = np.linalg.norm(offset)
        if length <= self.radius:
            return np.array(y, dtype=float)
        return self.center + offset * (self.radius / length)

    def bounding_box(self) -> 'Box':
        return Box(self.center - self.radius, self.center + self.radius)

    def normal_generators(self, z: np.ndarray, tol: float = ACTIVE_TOL) -> np.ndarray:
        offset = z - self.center
        if np.linalg.norm(offset) < self.radius - tol:
            return np.zeros((0, self.dim))
        if self.radius == 0:
            return coordinate_generators(self.dim)
        return (offset / np.linalg.norm(offset))[None, :]


@dataclass(frozen=True, eq=False)
class Singleton(ClosedSet):
    """A single point."""

    point: np.ndarray
    polyhedral: ClassVar[bool] = True

    def __post_init__(self) -> None:
        object.__setattr__(self, 'point', as_vector(self.point))

    @property
    def dim(self) -> int:
        return self.point.size

    def distance(self, y: np.ndarray) -> float:
        return float(np.linalg.norm(y - self.point))

    def project(self, y: np.ndarray) -> np.ndarray:
        return self.point.copy()

    def bounding_box(self) -> 'Box':
        return Box(self.point, self.point)

    def normal_generators(self, z: np.ndarray, tol: float = ACTIVE_TOL) -> np.ndarray:
        return coordinate_generators(self.dim)


@dataclass(frozen=True, eq=False)
class Box(ClosedSet):
    """Product of closed intervals; bounds may be infinite."""

    lower: np.ndarray
    upper: np.ndarray
    polyhedral: ClassVar[bool] = True

    def __post_init__(self) -> None:
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ContractViolation("box bounds must be 1-d arrays of equal length")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise ContractViolation("box bounds must not be NaN")
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @classmethod
    def interval(cls, low: float, high: float) -> 'Box':
        return cls([low], [high])

    @classmethod
    def whole(cls, dim: int) -> 'Box':
        return cls(np.full(dim, -np.inf), np.full(dim, np.inf))

    @classmethod
    def around(cls, center: np.ndarray, radius: float) -> 'Box':
        center = np.asarray(center, dtype=float)
        return cls(center - radius, center + radius)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def is_empty(self) -> bool:
        return bool(np.any(self.lower > self.upper))

    def project(self, y: np.ndarray) -> np.ndarray:
        if self.is_empty():
            raise NoProjection("box is empty")
        return np.clip(y, self.lower, self.upper)

    def intersect(self, other: 'Box') -> 'Box':
        return Box(np.maximum(self.lower, other.lower), np.minimum(self.upper, other.upper))

    def bounding_box(self) -> 'Box':
        return self

    def normal_generators(self, z: np.ndarray, tol: float = ACTIVE_TOL) -> np.ndarray:
        gens = []
        for axis in range(self.dim):
            unit = np.zeros(self.dim)
            unit[axis] = 1.0
            if z[axis] <= self.lower[axis] + tol:
                gens.append(-unit)
            if z[axis] >= self.upper[axis] - tol:
                gens.append(unit)
        return np.array(gens) if gens else np.zeros((0, self.dim))


@dataclass(frozen=True, eq=False)
class CartesianProduct(ClosedSet):
    """Product of closed sets under the sum metric."""

    factors: tuple[ClosedSet, ...]

    def __post_init__(self) -> None:
        if not self.factors:
            raise ContractViolation("a product needs at least one factor")
        object.__setattr__(self, 'factors', tuple(self.factors))

    @property
    def dim(self) -> int:
        return sum(f.dim for f in self.factors)

    @property
    def metric(self) -> MetricSpec:
        return MetricSpec.product(*(f.metric for f in self.factors))

    @property
    def polyhedral(self) -> bool:
        return all(f.polyhedral for f in self.factors)

    @property
    def convex(self) -> bool:
        return all(f.convex for f in self.factors)

    def _split(self, y: np.ndarray) -> list[np.ndarray]:
        return np.split(np.asarray(y, dtype=float), np.cumsum([f.dim for f in self.factors])[:-1])

    def is_empty(self) -> bool:
        return any(f.is_empty() for f in self.factors)

    def distance(self, y: np.ndarray) -> float:
        return float(sum(f.distance(part) for f, part in zip(self.factors, self._split(y))))

    def project(self, y: np.ndarray) -> np.ndarray:
        return np.concatenate([f.project(part) for f, part in zip(self.factors, self._split(y))])

    def bounding_box(self) -> 'Box':
        boxes = [f.bounding_box() for f in self.factors]
        return Box(np.concatenate([b.lower for b in boxes]), np.concatenate([b.upper for b in boxes]))

    def normal_generators(self, z: np.ndarray, tol: float = ACTIVE_TOL) -> np.ndarray:
        gens, start = [], 0
        for factor, part in zip(self.factors, self._split(z)):
            for g in factor.normal_generators(part, tol):
                row = np.zeros(self.dim)
                row[start:start + factor.dim] = g
                gens.append(row)
            start += factor.dim
        return np.array(gens) if gens else np.zeros((0, self.dim))


@dataclass(frozen=True, eq=False)
class AbsAtLeast(ClosedSet):
    """The one-dimensional set {y : |y| >= radius}."""

    radius: float
    convex: ClassVar[bool] = False

    def __post_init__(self) -> None:
        if not (self.radius >= 0 and np.isfinite(self.radius)):
            raise ContractViolation(f"radius must be finite and nonnegative, got {self.radius}")

    @property
    def dim(self) -> int:
        return 1

    def distance(self, y: np.ndarray) -> float:
        return max(0.0, self.radius - abs(float(y[0])))

    def project(self, y: np.ndarray) -> np.ndarray:
        value = float(y[0])
        if abs(value) >= self.radius:
            return np.array([value])
        return np.array([self.radius if value >= 0 else -self.radius])

    def as_union(self) -> 'Union':
        return Union((Box.interval(-np.inf, -self.radius), Box.interval(self.radius, np.inf)))

    def bounding_box(self) -> 'Box':
        return Box.whole(1)

    def normal_generators(self, z: np.ndarray, tol: float = ACTIVE_TOL) -> np.ndarray:
        return self.as_union().normal_generators(z, tol)


@dataclass(frozen=True, eq=False)
class Union(ClosedSet):
    """Finite union of closed sets; distance is the minimum over members."""

    members: tuple[ClosedSet, ...]
    convex: ClassVar[bool] = False

    def __post_init__(self) -> None:
        members = tuple(self.members)
        if not members:
            raise ContractViolation("a union needs at least one member")
        if len({m.dim for m in members}) != 1:
            raise ContractViolation("union members must share one dimension")
        object.__setattr__(self, 'members', members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    @property
    def metric(self) -> MetricSpec:
        return self.members[0].metric

    @property
    def polyhedral(self) -> bool:
        return all(m.polyhedral for m in self.members)

    def is_empty(self) -> bool:
        return all(m.is_empty() for m in self.members)

    def distance(self, y: np.ndarray) -> float:
        return float(min(m.distance(y) for m in self.members))

    def project(self, y: np.ndarray) -> np.ndarray:
        live = [m for m in self.members if not m.is_empty()]
        if not live:
            raise NoProjection("every union member is empty")
        nearest = min(live, key=lambda m: m.distance(y))
        return nearest.project(y)

    def bounding_box(self) -> 'Box':
        boxes = [m.bounding_box() for m in self.members if not m.is_empty()]
        if not boxes:
            return Box(np.ones(self.dim), np.zeros(self.dim))
        return Box(np.min([b.lower for b in boxes], axis=0), np.max([b.upper for b in boxes], axis=0))

    def normal_generators(self, z: np.ndarray, tol: float = ACTIVE_TOL) -> np.ndarray:
        # Fréchet normal cone of a finite union: intersection over active members
        active = [m for m in self.members if not m.is_empty() and m.distance(z) <= tol]
        if not active:
            raise ContractViolation("point is not in the union")
        gens = active[0].normal_generators(z, tol)
        for member in active[1:]:
            gens = intersect_cones(gens, member.normal_generators(z, tol))
        return gens


# ============================================================================
# Operations
# ============================================================================

def _checked(y, S: ClosedSet) -> np.ndarray:
    return as_vector(y, S.dim, name='y')


def dist_to_set(y, S: ClosedSet) -> float:
    """
    Exact distance from y to S; +inf when S is empty.

    Raises:
        ContractViolation: if the dimension of y differs from that of S
    """
    vec = _checked(y, S)
    if S.is_empty():
        return float('inf')
    return S.distance(vec)


def project_to_set(y, S: ClosedSet) -> np.ndarray:
    """Nearest point of S to y; unions project per branch and keep the nearest."""
    vec = _checked(y, S)
    if S.is_empty():
        raise NoProjection(f"cannot project onto an empty {type(S).__name__}")
    return S.project(vec)


def box_grid(box: Box, step: float, budget: int = Config.GRID_BUDGET) -> np.ndarray:
    """
    Regular grid over a finite box, rows in lexicographic order.

    Args:
        box: Region with finite bounds
        step: Grid spacing, shared by all axes
        budget: Maximum number of points

    Returns:
        Array of shape (N, dim)

    Raises:
        BudgetExceeded: when N would exceed the budget
    """
    if not step > 0:
        raise ContractViolation(f"grid step must be positive, got {step}")
    if not box.finite:
        raise ContractViolation("grid region must have finite bounds")
    if box.is_empty():
        return np.zeros((0, box.dim))
    counts = np.floor((box.upper - box.lower) / step + 1e-9).astype(int) + 1
    total = int(np.prod(counts.astype(float)))
    if total > budget:
        raise BudgetExceeded(total, budget)
    axes = [np.round(lo + step * np.arange(n), GRID_DECIMALS) + 0.0 for lo, n in zip(box.lower, counts)]
    mesh = np.meshgrid(*axes, indexing='ij')
    return np.stack([m.ravel() for m in mesh], axis=1)


def sample_set(S: ClosedSet, step: float, bounds: Optional[Box] = None,
               budget: int = Config.GRID_BUDGET) -> np.ndarray:
    """
    Finite sample of S inside a bounded region.

    Grid points of the region are projected onto S, so boundary points of
    S are hit exactly; duplicates are dropped.
    """
    if isinstance(S, FiniteCloud):
        points = S.points
        if bounds is not None and points.size:
            points = points[[bounds.contains(pt) for pt in points]]
        return points
    if S.is_empty():
        return np.zeros((0, S.dim))
    region = bounds if bounds is not None else S.bounding_box()
    if not region.finite:
        raise ContractViolation(f"{type(S).__name__} is unbounded; a finite sampling region is required")
    grid = box_grid(region, step, budget)
    if grid.shape[0] == 0:
        return grid
    projected = np.array([S.project(g) for g in grid])
    inside = np.all((projected >= region.lower - Config.TOL_FEAS) & (projected <= region.upper + Config.TOL_FEAS), axis=1)
    projected = projected[inside]
    if projected.shape[0] == 0:
        return projected
    return np.unique(np.round(projected, GRID_DECIMALS) + 0.0, axis=0)


def excess(A: ClosedSet, B: ClosedSet, step: Optional[float] = None,
           bounds: Optional[Box] = None) -> float:
    """
    One-sided excess of a sampled A over B: sup of dist(a, B) over samples.

    An empty A gives 0 (the inclusion holds vacuously).
    """
    if A.dim != B.dim:
        raise ContractViolation(f"excess needs equal dimensions, got {A.dim} and {B.dim}")
    if isinstance(A, FiniteCloud):
        points = sample_set(A, 1.0, bounds)
    else:
        if step is None:
            raise ContractViolation("a sampling step is required unless A is a FiniteCloud")
        points = sample_set(A, step, bounds)
    if points.shape[0] == 0:
        return 0.0
    return float(max(dist_to_set(a, B) for a in points))


def lipschitz_residual(S: ClosedSet, y1, y2) -> float:
    """|dist(y1,S) - dist(y2,S)| - d(y1,y2); never positive for a valid evaluator."""
    return abs(dist_to_set(y1, S) - dist_to_set(y2, S)) - S.metric.distance(as_vector(y1), as_vector(y2))


# ============================================================================
# Seeded low-discrepancy sampling
# ============================================================================

def halton(dim: int, count: int, seed: int) -> np.ndarray:
    """Scrambled Halton points in [0, 1)^dim; identical for identical seeds."""
    return qmc.Halton(d=dim, scramble=True, seed=seed).random(count)


def ball_directions(dim: int, count: int, seed: int, metric: Optional[MetricSpec] = None) -> np.ndarray:
    """Unit vectors (in the given metric) spread over the sphere."""
    metric = metric or MetricSpec.euclidean(dim)
    raw = 2.0 * halton(dim, count, seed) - 1.0
    norms = np.array([metric.norm(row) for row in raw])
    keep = norms > 1e-12
    return raw[keep] / norms[keep, None]


def ball_points(center: np.ndarray, radius: float, count: int, seed: int,
                metric: Optional[MetricSpec] = None) -> np.ndarray:
    """
    Points of the closed ball B(center, radius) minus its center.

    Directions and radial fractions come from one Halton stream, so the
    same seed gives the same unit-ball pattern at every radius.
    """
    center = np.asarray(center, dtype=float)
    dim = center.size
    metric = metric or MetricSpec.euclidean(dim)
    raw = halton(dim + 1, count, seed)
    directions = 2.0 * raw[:, :dim] - 1.0
    norms = np.array([metric.norm(row) for row in directions])
    keep = norms > 1e-12
    fractions = 1.0 - raw[keep, dim]
    return center + radius * fractions[:, None] * directions[keep] / norms[keep, None]
