"""Brute-force grid estimates of Lipschitz lsc, calmness, upper Lipschitz and Aubin moduli."""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from config import Config
from varistab.errors import ContractViolation
from varistab.geneq import GenEqProblem, solve_on_grid
from varistab.metric_core import Box, ClosedSet, FiniteCloud, as_vector, dist_to_set, sample_set, sweep

logger = logging.getLogger(__name__)

KINDS = ('liplsc', 'calm', 'upper_lipschitz', 'aubin')
DIVERGENCE_TRANSITIONS = 4
DIVERGENCE_GROWTH = 1.5


@dataclass(frozen=True)
class SetValuedMap:
    """A mapping p ↦ Φ(p) that can be evaluated as a closed set."""

    name: str
    evaluate: Callable[[np.ndarray], ClosedSet]
    dim_p: int
    dim_x: int

    def __call__(self, p) -> ClosedSet:
        values = self.evaluate(as_vector(p, self.dim_p, 'p'))
        if values.dim != self.dim_x:
            raise ContractViolation(f"{self.name} returned a set of dimension {values.dim}, expected {self.dim_x}")
        return values


def exact_map(name: str, evaluate: Callable[[np.ndarray], ClosedSet], dim_p: int, dim_x: int) -> SetValuedMap:
    """Wrap a closed-form formula for Φ(p)."""
    return SetValuedMap(name, evaluate, dim_p, dim_x)


def solution_map(prob: GenEqProblem, resolution: float = Config.X_STEP, tol: float = Config.TOL_SOLUTION,
                 workers: int = 1) -> SetValuedMap:
    """The solution map G of a generalized equation, sampled by solve_on_grid and cached per p."""
    cache: dict[tuple, FiniteCloud] = {}

    def evaluate(p: np.ndarray) -> ClosedSet:
        key = tuple(np.round(p, 12))
        if key not in cache:
            sample = solve_on_grid(prob, p, resolution=resolution, tol=tol, workers=workers)
            cache[key] = FiniteCloud(sample.points) if len(sample) else FiniteCloud.empty(prob.dim_x)
        return cache[key]

    return SetValuedMap(f'G[{prob.name}]', evaluate, prob.dim_p, prob.dim_x)


def dyadic_points(center, radius: float, scales: int) -> np.ndarray:
    """Points center ± radius·2⁻ᵏ·e_i for k < scales, coarsest first."""
    center = as_vector(center, name='center')
    rows = []
    for k in range(scales):
        for i in range(center.size):
            for sign in (1.0, -1.0):
                point = center.copy()
                point[i] += sign * radius * 2.0**-k
                rows.append(point)
    return np.array(rows)


@dataclass
class OracleGrid:
    """p-points (excluding p̄ in quotients), x-grid spacing and region, optional localization δ."""

    p_points: np.ndarray
    x_step: float
    x_region: Box
    delta: Optional[float] = None
    radius: Optional[float] = None

    @classmethod
    def dyadic(cls, p_ref, radius: float, scales: int, x_step: float, x_region: Box,
               delta: Optional[float] = None) -> 'OracleGrid':
        return cls(dyadic_points(p_ref, radius, scales), x_step, x_region, delta, radius)

    @property
    def spacing(self) -> float:
        return self.x_step


@dataclass
class DivergenceTrace:
    """Per-dyadic-scale maxima of the quotients, coarsest scale first."""

    scales: list[int]
    maxima: list[float]
    diverging: bool
    growth: float


def divergence_trace(distances, values, radius: float) -> DivergenceTrace:
    """
    Group quotients by dyadic scale k = floor(log2(radius/d)) and decide divergence.

    Divergence is declared when the per-scale maxima increase across each
    of the four finest transitions with total growth at least 1.5, or when
    any quotient is +inf.
    """
    per_scale: dict[int, float] = {}
    for d, q in zip(distances, values):
        if d <= 0:
            continue
        k = int(np.floor(np.log2(radius / d) + 1e-9))
        per_scale[k] = max(per_scale.get(k, 0.0), q)
    scales = sorted(per_scale)
    maxima = [per_scale[k] for k in scales]
    if any(np.isinf(q) for q in maxima):
        return DivergenceTrace(scales, maxima, True, float('inf'))
    if len(maxima) <= DIVERGENCE_TRANSITIONS:
        return DivergenceTrace(scales, maxima, False, 1.0)
    tail = maxima[-(DIVERGENCE_TRANSITIONS + 1):]
    rising = all(b > a for a, b in zip(tail, tail[1:]))
    if tail[0] > 0:
        growth = tail[-1] / tail[0]
    else:
        growth = float('inf') if tail[-1] > 0 else 1.0
    return DivergenceTrace(scales, maxima, rising and growth >= DIVERGENCE_GROWTH, growth)


@dataclass
class EmpiricalEstimate:
    """Grid estimate of a stability modulus with its witnesses and grid."""

    kind: str
    value: float
    diverging: bool
    witness: dict = field(default_factory=dict)
    p_points: list[list[float]] = field(default_factory=list)
    x_step: float = 0.0
    delta: Optional[float] = None
    zeta: Optional[float] = None
    quotients: list[dict] = field(default_factory=list)
    trace: Optional[DivergenceTrace] = None

    @property
    def spacing(self) -> float:
        return self.x_step


def _localized_sample(values: ClosedSet, x_ref: np.ndarray, grid: OracleGrid) -> np.ndarray:
    bounds = grid.x_region
    if grid.delta is not None:
        bounds = bounds.intersect(Box.around(x_ref, grid.delta))
    points = sample_set(values, grid.x_step, bounds)
    if grid.delta is not None and points.shape[0]:
        points = points[np.linalg.norm(points - x_ref, axis=1) <= grid.delta + 1e-12]
    return points


def _excess_quotient(source: np.ndarray, target: ClosedSet, distance: float) -> tuple[float, Optional[np.ndarray]]:
    """Largest dist(x, target)/distance over sampled x, with its argmax."""
    if source.shape[0] == 0:
        return 0.0, None
    gaps = np.array([dist_to_set(x, target) for x in source])
    index = int(np.argmax(gaps))
    return float(gaps[index] / distance), source[index]


def empirical_modulus(mapping: SetValuedMap, kind: str, p_ref, x_ref, grid: OracleGrid,
                      workers: int = 1, zeta: Optional[float] = None) -> EmpiricalEstimate:
    """
    Brute-force modulus of a set-valued mapping over a grid.

    Args:
        mapping: Φ, evaluable at every grid parameter
        kind: 'liplsc', 'calm', 'upper_lipschitz' or 'aubin'
        p_ref: Reference parameter p̄ (never used as a quotient point)
        x_ref: Reference point x̄
        grid: p-points, x-grid and δ; upper_lipschitz ignores δ
        workers: Thread cap for the p sweep
        zeta: Validation radius, recorded for information

    Returns:
        EmpiricalEstimate; value is +inf when the dyadic trace diverges

    Raises:
        ContractViolation: unknown kind, or Φ(p̄) empty for kind 'calm'
    """
    if kind not in KINDS:
        raise ContractViolation(f"unknown modulus kind {kind!r}")
    p_ref = as_vector(p_ref, mapping.dim_p, 'p_ref')
    x_ref = as_vector(x_ref, mapping.dim_x, 'x_ref')
    p_points = [p for p in np.atleast_2d(grid.p_points) if np.linalg.norm(p - p_ref) > 0]
    if kind == 'upper_lipschitz':
        grid = OracleGrid(grid.p_points, grid.x_step, grid.x_region, None, grid.radius)
    radius = grid.radius or max((float(np.linalg.norm(p - p_ref)) for p in p_points), default=1.0)

    reference_set = mapping(p_ref)
    if kind == 'calm' and reference_set.is_empty():
        raise ContractViolation(f"{mapping.name}(p̄) is empty; calmness is undefined")

    rows: list[dict] = []
    if kind == 'liplsc':
        def quotient(p: np.ndarray) -> list[dict]:
            d = float(np.linalg.norm(p - p_ref))
            return [{'p': p, 'x': x_ref, 'distance': d, 'quotient': dist_to_set(x_ref, mapping(p)) / d}]
    elif kind in ('calm', 'upper_lipschitz'):
        def quotient(p: np.ndarray) -> list[dict]:
            d = float(np.linalg.norm(p - p_ref))
            value, witness = _excess_quotient(_localized_sample(mapping(p), x_ref, grid), reference_set, d)
            return [{'p': p, 'x': witness, 'distance': d, 'quotient': value}]
    else:
        partners = p_points + [p_ref]

        def quotient(p: np.ndarray) -> list[dict]:
            source = _localized_sample(mapping(p), x_ref, grid)
            out = []
            for other in partners:
                d = float(np.linalg.norm(p - other))
                if d == 0:
                    continue
                value, witness = _excess_quotient(source, mapping(other), d)
                out.append({'p': p, 'p_prime': other, 'x': witness, 'distance': d, 'quotient': value})
            return out

    for batch in sweep(quotient, p_points, workers):
        rows.extend(batch)

    trace = divergence_trace([r['distance'] for r in rows], [r['quotient'] for r in rows], radius)
    best = max(rows, key=lambda r: r['quotient'], default=None)
    value = float('inf') if trace.diverging else (best['quotient'] if best else 0.0)
    witness = {}
    if best is not None:
        witness = {key: (val.tolist() if isinstance(val, np.ndarray) else val) for key, val in best.items()}
    logger.info("empirical %s modulus of %s: %s%s", kind, mapping.name, value, ' (diverging)' if trace.diverging else '')
    return EmpiricalEstimate(
        kind=kind,
        value=value,
        diverging=trace.diverging,
        witness=witness,
        p_points=[p.tolist() for p in p_points],
        x_step=grid.x_step,
        delta=grid.delta,
        zeta=zeta,
        quotients=[{'p': r['p'].tolist(), 'distance': r['distance'], 'quotient': r['quotient']} for r in rows],
        trace=trace,
    )


@dataclass
class ComparisonResult:
    """Outcome of checking an empirical modulus against a theoretical bound."""

    passed: bool
    bound: float
    empirical: float
    threshold: float
    spacing: float
    witness: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return 'Pass' if self.passed else 'Fail'


def verdict_compare(bound: float, empirical: EmpiricalEstimate, slack: float = Config.VALIDATION_SLACK) -> ComparisonResult:
    """Pass iff the empirical value is at most bound·(1+slack) + grid spacing."""
    threshold = bound * (1 + slack) + empirical.spacing if np.isfinite(bound) else float('inf')
    passed = bool(empirical.value <= threshold)
    if not passed:
        logger.warning("empirical %s modulus %.6g exceeds bound %.6g (threshold %.6g)",
                       empirical.kind, empirical.value, bound, threshold)
    return ComparisonResult(
        passed=passed,
        bound=bound,
        empirical=empirical.value,
        threshold=threshold,
        spacing=empirical.spacing,
        witness=dict(empirical.witness),
    )
