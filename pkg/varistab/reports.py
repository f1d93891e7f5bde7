"""Serialization of checker results into run reports: text, JSON and CSV tables."""
import csv
import json
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

import numpy as np

from varistab import __version__
from varistab.errors import ConfigError
from varistab.oracle import ComparisonResult, DivergenceTrace, EmpiricalEstimate
from varistab.optstab import ArgminReport, ProblemCalmness, PropositionReport, ScalarCalmness, ValueFunctionTable
from varistab.slopes_dual import SlopeEstimate
from varistab.stability import (
    CalmReport,
    CoderivativeReport,
    HypothesisStatus,
    LiplscReport,
    PerturbationConstants,
    SmoothBaseReport,
    TrackerCertificate,
    ValidationRow,
    Verdict,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TOOLKIT = 'varistab'
FORMATS = ('text', 'json', 'csv')


def clean(value: Any) -> Any:
    """Make a value JSON-safe: arrays become lists, infinities the strings '+inf'/'-inf', NaN None."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return [clean(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if np.isnan(value):
            return None
        if np.isinf(value):
            return '+inf' if value > 0 else '-inf'
        return value
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    return value


def status_to_dict(status: HypothesisStatus) -> dict:
    return {
        'id': status.id,
        'status': status.status.value,
        'constants': clean(status.constants),
        'witness': clean(status.witness),
        'note': status.note,
    }


def slope_to_dict(estimate: SlopeEstimate) -> dict:
    """
    Serialize a per-level slope estimate.

    Returns:
        Dictionary containing: value, positive, monotone, local_min,
        radii, values, empty_levels, sampled
    """
    return {
        'value': clean(estimate.value),
        'positive': estimate.positive,
        'monotone': estimate.monotone,
        'local_min': estimate.local_min,
        'radii': clean(estimate.radii),
        'values': clean(estimate.values),
        'empty_levels': list(estimate.empty_levels),
        'sampled': estimate.sampled,
    }


def constants_to_dict(constants: PerturbationConstants) -> dict:
    return {
        'mode': constants.mode,
        'l_field': clean(constants.l_field),
        'l_base': clean(constants.l_base),
        'diverging_field': constants.diverging_field,
        'diverging_base': constants.diverging_base,
        'witness_field': clean(constants.witness_field),
        'witness_base': clean(constants.witness_base),
    }


def trace_to_dict(trace: Optional[DivergenceTrace]) -> Optional[dict]:
    if trace is None:
        return None
    return {'scales': trace.scales, 'maxima': clean(trace.maxima), 'diverging': trace.diverging,
            'growth': clean(trace.growth)}


def empirical_to_dict(estimate: Optional[EmpiricalEstimate]) -> Optional[dict]:
    """Serialize an oracle estimate; per-p quotients go to the CSV table instead."""
    if estimate is None:
        return None
    return {
        'kind': estimate.kind,
        'value': clean(estimate.value),
        'diverging': estimate.diverging,
        'witness': clean(estimate.witness),
        'x_step': estimate.x_step,
        'delta': clean(estimate.delta),
        'zeta': clean(estimate.zeta),
        'p_count': len(estimate.p_points),
        'trace': trace_to_dict(estimate.trace),
    }


def comparison_to_dict(comparison: Optional[ComparisonResult]) -> Optional[dict]:
    if comparison is None:
        return None
    return {
        'verdict': comparison.verdict,
        'bound': clean(comparison.bound),
        'empirical': clean(comparison.empirical),
        'threshold': clean(comparison.threshold),
        'spacing': comparison.spacing,
    }


def validation_to_dict(row: ValidationRow) -> dict:
    return {'p': clean(row.p), 'distance': clean(row.distance), 'nearest': clean(row.nearest),
            'allowed': clean(row.allowed), 'passed': row.passed}


def liplsc_to_dict(report: LiplscReport) -> dict:
    return {
        'statuses': [status_to_dict(s) for s in report.statuses],
        'constants': constants_to_dict(report.constants),
        'slope': slope_to_dict(report.slope),
        'bound': clean(report.bound),
        'zeta': clean(report.zeta),
        'validation': [validation_to_dict(r) for r in report.validation],
        'empirical': empirical_to_dict(report.empirical),
    }


def calm_to_dict(report: CalmReport) -> dict:
    return {
        'statuses': [status_to_dict(s) for s in report.statuses],
        'constants': constants_to_dict(report.constants),
        'slope': slope_to_dict(report.slope),
        'bound': clean(report.bound),
        'zeta': clean(report.zeta),
        'empirical': empirical_to_dict(report.empirical),
        'comparison': comparison_to_dict(report.comparison),
    }


def coderivative_to_dict(report: CoderivativeReport) -> dict:
    return {
        'statuses': [status_to_dict(s) for s in report.statuses],
        'constants': constants_to_dict(report.constants),
        'c': slope_to_dict(report.c),
        'empirical': empirical_to_dict(report.empirical),
    }


def smooth_base_to_dict(report: SmoothBaseReport) -> dict:
    return {
        'gamma': report.gamma,
        'status': status_to_dict(report.status),
        'levels': [{'epsilon': level.epsilon, 'qualifying': level.qualifying,
                    'worst_margin': clean(level.worst_margin), 'passed': level.passed}
                   for level in report.levels],
        'outer_norm_exact': report.outer_norm_exact,
    }


def certificate_to_dict(certificate: TrackerCertificate) -> dict:
    return {
        'x_hat': clean(certificate.x_hat),
        'psi': clean(certificate.psi),
        'distance': clean(certificate.distance),
        'bound': clean(certificate.bound),
        'within_bound': certificate.within_bound,
        'iterations': certificate.iterations,
    }


def argmin_to_dict(report: ArgminReport) -> dict:
    return {
        'variant': report.variant,
        'kappa': clean(report.kappa),
        'hypotheses': [status_to_dict(h) for h in report.hypotheses],
        'equation': liplsc_to_dict(report.equation) if report.equation is not None else None,
        'empirical': empirical_to_dict(report.empirical),
        'comparison': comparison_to_dict(report.comparison),
        'coincides': report.coincides,
    }


def proposition_to_dict(report: PropositionReport) -> dict:
    return {
        'which': report.which,
        'verdict': report.verdict.value,
        'hypotheses': [status_to_dict(h) for h in report.hypotheses],
        'conclusion': status_to_dict(report.conclusion),
        'consistent': report.consistent,
        'constants': clean(report.constants),
    }


def scalar_calmness_to_dict(result: ScalarCalmness) -> dict:
    return {'side': result.side, 'calm': result.calm, 'lower': clean(result.lower), 'upper': clean(result.upper),
            'witness_lower': clean(result.witness_lower), 'witness_upper': clean(result.witness_upper)}


def problem_calmness_to_dict(result: ProblemCalmness) -> dict:
    return {'calm': result.calm, 'infimum': clean(result.infimum), 'diverging': result.diverging,
            'witness': clean(result.witness)}


def value_table_to_dict(table: ValueFunctionTable) -> dict:
    return {'p_points': clean(table.p_points), 'values': clean(table.values), 'feasible': table.feasible}


# ============================================================================
# Run reports
# ============================================================================

@dataclass
class RunReport:
    """
    The outcome of one command run.

    `result` holds the serialized checker output; `tables` maps CSV file
    names to rows. Timing is shown in the text report only.
    """

    command: str
    instance: str
    seed: int
    verdict: Verdict
    result: dict
    tables: dict[str, list[dict]] = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def exit_code(self) -> int:
        return self.verdict.exit_code

    def to_dict(self) -> dict:
        return {
            'schema': SCHEMA_VERSION,
            'toolkit': TOOLKIT,
            'version': __version__,
            'command': self.command,
            'instance': self.instance,
            'seed': self.seed,
            'verdict': self.verdict.value,
            'exit_code': self.exit_code,
            'result': clean(self.result),
        }


def slope_rows(estimate: SlopeEstimate) -> list[dict]:
    return [{'level': k, 'epsilon': eps, 'inf_slope': value}
            for k, (eps, value) in enumerate(zip(estimate.radii, estimate.values))]


def quotient_rows(quotients: list[dict]) -> list[dict]:
    return [{'p': ' '.join(repr(float(v)) for v in row['p']), 'distance': row['distance'],
             'quotient': row['quotient']} for row in quotients]


def trace_rows(trace: list[dict]) -> list[dict]:
    return [{'iteration': row['iteration'], 'psi': row['psi'], 'distance': row['distance']} for row in trace]


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        if np.isinf(value):
            return '+inf' if value > 0 else '-inf'
        return repr(value)
    return str(value)


def render_text(report: RunReport) -> str:
    """Human-readable summary of a run report."""
    lines = [
        f"{TOOLKIT} {__version__}: {report.command} on {report.instance} (seed {report.seed})",
        f"verdict: {report.verdict.value} (exit code {report.exit_code})",
    ]
    result = clean(report.result)
    for key, value in result.items():
        if key in ('statuses', 'hypotheses') and isinstance(value, list):
            lines.append(f"{key}:")
            for status in value:
                note = f" - {status['note']}" if status.get('note') else ''
                lines.append(f"  ({status['id']}) {status['status']}{note}")
                if status.get('witness'):
                    lines.append(f"      witness: {json.dumps(status['witness'])}")
        elif isinstance(value, (dict, list)):
            lines.append(f"{key}: {json.dumps(value)}")
        else:
            lines.append(f"{key}: {_format_value(value)}")
    lines.append(f"elapsed: {report.elapsed:.2f}s")
    return '\n'.join(lines) + '\n'


def _write_csv(path: str, rows: list[dict]) -> None:
    columns = list(rows[0]) if rows else []
    with open(path, 'w', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=columns, lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format_value(v) for k, v in row.items()})


def emit_report(report: RunReport, out_dir: str, formats=FORMATS) -> list[str]:
    """
    Write the report to out_dir.

    Args:
        report: The finished run report
        out_dir: Output directory, created when missing
        formats: Any of 'text', 'json', 'csv'

    Returns:
        Paths written, in the order text, json, csv tables

    Raises:
        ConfigError: when the directory cannot be written
    """
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ConfigError(f"unknown formats {sorted(unknown)}", 'output.formats')
    written = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        if 'text' in formats:
            path = os.path.join(out_dir, 'report.txt')
            with open(path, 'w') as handle:
                handle.write(render_text(report))
            written.append(path)
        if 'json' in formats:
            path = os.path.join(out_dir, 'report.json')
            with open(path, 'w') as handle:
                handle.write(json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + '\n')
            written.append(path)
        if 'csv' in formats:
            for name, rows in report.tables.items():
                path = os.path.join(out_dir, name)
                _write_csv(path, rows)
                written.append(path)
    except OSError as exc:
        raise ConfigError(f"cannot write report: {exc}", 'output.dir')
    logger.info("wrote %d report files to %s", len(written), out_dir)
    return written
