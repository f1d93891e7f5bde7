"""Command-line entry point: run a configured check and emit its reports."""
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import click
import numpy as np
from jsonschema import Draft7Validator

from config import Config
from varistab import configure_logging, get_settings
from varistab.catalog import BUILTINS, build_inline, build_instance, catalog_summaries, get_entry
from varistab.errors import ConfigError, VaristabError
from varistab.geneq import GenEqProblem, displacement
from varistab.oracle import KINDS, OracleGrid, empirical_modulus, solution_map, verdict_compare
from varistab.optstab import (
    OptStabConfig,
    ParamOptProblem,
    argmin_generalized_equation,
    argmin_map,
    check_argmin_liplsc,
    check_value_function_props,
    value_table,
)
from varistab.reports import (
    FORMATS,
    RunReport,
    argmin_to_dict,
    calm_to_dict,
    certificate_to_dict,
    coderivative_to_dict,
    comparison_to_dict,
    emit_report,
    empirical_to_dict,
    liplsc_to_dict,
    proposition_to_dict,
    quotient_rows,
    render_text,
    slope_rows,
    slope_to_dict,
    smooth_base_to_dict,
    trace_rows,
    value_table_to_dict,
)
from varistab.slopes_dual import RadiusSchedule, partial_strict_outer_slope_x, strict_outer_slope
from varistab.stability import (
    StabilityConfig,
    TrackerConfig,
    Verdict,
    check_calm,
    check_calm_coderivative,
    check_calm_smooth_base,
    check_liplsc,
    ekeland_track,
    graph_slope,
)

logger = logging.getLogger(__name__)

COMMANDS = ('slope', 'check-liplsc', 'check-calm', 'check-calm-coderivative', 'check-calm-smooth',
            'track', 'empirical', 'optstab', 'catalog')
INSTANCE_OPTIONS = ('member', 'slope')
PROPOSITIONS = ('P1', 'P2', 'P3', 'P4')

_NUMBERS = {'type': 'array', 'items': {'type': 'number'}, 'minItems': 1}
_EXPRESSION = {'type': ['string', 'number']}

RUN_CONFIG_SCHEMA = {
    '$schema': 'http://json-schema.org/draft-07/schema#',
    'type': 'object',
    'additionalProperties': False,
    'required': ['schema', 'command'],
    'properties': {
        'schema': {'const': 1},
        'instance': {'oneOf': [{'type': 'string'}, {'$ref': '#/definitions/inline'}]},
        'command': {'enum': list(COMMANDS)},
        'seed': {'type': 'integer', 'minimum': 0},
        'schedule': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {
                'eps0': {'type': 'number', 'exclusiveMinimum': 0},
                'decay': {'type': 'number', 'exclusiveMinimum': 0, 'exclusiveMaximum': 1},
                'levels': {'type': 'integer', 'minimum': 3},
                'samples_per_level': {'type': 'integer', 'minimum': 64},
            },
        },
        'tracker': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {
                'c': {'type': 'number', 'exclusiveMinimum': 0},
                'initial_step': {'type': 'number', 'exclusiveMinimum': 0},
                'decay': {'type': 'number', 'exclusiveMinimum': 0, 'exclusiveMaximum': 1},
                'step_floor': {'type': 'number', 'minimum': 1e-8},
                'max_iterations': {'type': 'integer', 'minimum': 1},
                'tol_solution': {'type': 'number', 'exclusiveMinimum': 0},
                'delta_star': {'type': 'number', 'exclusiveMinimum': 0},
                'directions': {'type': 'integer', 'minimum': 1},
                'p': _NUMBERS,
            },
        },
        'grids': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {
                'p_radius': {'type': 'number', 'exclusiveMinimum': 0},
                'p_scales': {'type': 'integer', 'minimum': 1},
                'x_step': {'type': 'number', 'exclusiveMinimum': 0},
                'delta_star': {'type': 'number', 'exclusiveMinimum': 0},
                'delta': {'type': 'number', 'exclusiveMinimum': 0},
                'validation_p': _NUMBERS,
                'slack': {'type': 'number', 'minimum': 0},
            },
        },
        'options': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {
                'member': {'enum': [0, 1]},
                'slope': {'type': 'number'},
                'variant': {'enum': ['slope', 'subdifferential', 'smooth']},
                'gamma': {'type': 'number', 'exclusiveMinimum': 0},
                'which': {'type': 'array', 'items': {'enum': list(PROPOSITIONS)}, 'minItems': 1},
                'kind': {'enum': list(KINDS)},
                'target': {'enum': ['graph', 'displacement']},
                'bound': {'type': 'number', 'minimum': 0},
            },
        },
        'output': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {
                'dir': {'type': 'string'},
                'formats': {'type': 'array', 'items': {'enum': list(FORMATS)}},
            },
        },
    },
    'definitions': {
        'inline': {
            'type': 'object',
            'additionalProperties': False,
            'required': ['base', 'field', 'p_ref', 'x_ref', 'p_region', 'x_region'],
            'properties': {
                'name': {'type': 'string'},
                'base': {'type': 'array', 'items': _EXPRESSION, 'minItems': 1},
                'field': {'type': 'object', 'required': ['type']},
                'p_ref': _NUMBERS,
                'x_ref': _NUMBERS,
                'p_region': {'type': 'array', 'items': {'type': 'array', 'items': {'type': 'number'},
                                                        'minItems': 2, 'maxItems': 2}},
                'x_region': {'type': 'array', 'items': {'type': 'array', 'items': {'type': 'number'},
                                                        'minItems': 2, 'maxItems': 2}},
                'graph': {
                    'type': 'object',
                    'additionalProperties': False,
                    'required': ['normals', 'offsets'],
                    'properties': {
                        'normals': {'type': 'array', 'items': _NUMBERS},
                        'offsets': _NUMBERS,
                    },
                },
            },
        },
    },
}


def validate_run_config(data) -> dict:
    """
    Validate a parsed run configuration.

    Raises:
        ConfigError: naming the field path of the first schema violation
    """
    validator = Draft7Validator(RUN_CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: [str(part) for part in e.absolute_path])
    if errors:
        first = errors[0]
        path = '.'.join(str(part) for part in first.absolute_path) or '<root>'
        raise ConfigError(first.message, path)
    if data['command'] != 'catalog' and 'instance' not in data:
        raise ConfigError("an instance is required", 'instance')
    return data


def load_run_config(path: str) -> dict:
    """Read and validate a JSON run configuration."""
    try:
        with open(path) as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, line=exc.lineno)
    return validate_run_config(data)


# ============================================================================
# Commands
# ============================================================================

@dataclass
class RunContext:
    """Everything a command needs besides the instance."""

    seed: int
    schedule: RadiusSchedule
    stability: StabilityConfig
    optstab: OptStabConfig
    tracker: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    entry_name: Optional[str] = None


@dataclass
class CommandResult:
    verdict: Verdict
    result: dict
    tables: dict = field(default_factory=dict)


def _as_equation(instance) -> GenEqProblem:
    if isinstance(instance, ParamOptProblem):
        return argmin_generalized_equation(instance)
    return instance


def _positive_verdict(holds: bool) -> Verdict:
    return Verdict.PASS if holds else Verdict.FAIL


def run_slope(instance, ctx: RunContext) -> CommandResult:
    if isinstance(instance, ParamOptProblem):
        estimate = partial_strict_outer_slope_x(instance.phi, instance.p_ref, instance.x_ref, ctx.schedule)
    elif ctx.options.get('target', 'graph') == 'graph':
        estimate = graph_slope(instance, ctx.schedule)
    else:
        estimate = strict_outer_slope(lambda x: displacement(instance, instance.p_ref, x), instance.x_ref,
                                      ctx.schedule, instance.x_metric)
    return CommandResult(_positive_verdict(estimate.positive), slope_to_dict(estimate),
                         {'slope.csv': slope_rows(estimate)})


def run_check_liplsc(instance, ctx: RunContext) -> CommandResult:
    if isinstance(instance, ParamOptProblem):
        report = check_argmin_liplsc(instance, ctx.options.get('variant', 'slope'), ctx.stability)
        tables = {}
        if report.empirical is not None:
            tables['quotients.csv'] = quotient_rows(report.empirical.quotients)
        return CommandResult(report.verdict, argmin_to_dict(report), tables)
    report = check_liplsc(instance, ctx.stability)
    tables = {'slope.csv': slope_rows(report.slope)}
    if report.empirical is not None:
        tables['quotients.csv'] = quotient_rows(report.empirical.quotients)
    return CommandResult(report.verdict, liplsc_to_dict(report), tables)


def run_check_calm(instance, ctx: RunContext) -> CommandResult:
    report = check_calm(_as_equation(instance), ctx.stability)
    tables = {'slope.csv': slope_rows(report.slope)}
    if report.empirical is not None:
        tables['quotients.csv'] = quotient_rows(report.empirical.quotients)
    return CommandResult(report.verdict, calm_to_dict(report), tables)


def run_check_calm_coderivative(instance, ctx: RunContext) -> CommandResult:
    report = check_calm_coderivative(_as_equation(instance), ctx.stability)
    tables = {'slope.csv': slope_rows(report.c)}
    if report.empirical is not None:
        tables['quotients.csv'] = quotient_rows(report.empirical.quotients)
    return CommandResult(report.verdict, coderivative_to_dict(report), tables)


def run_check_calm_smooth(instance, ctx: RunContext) -> CommandResult:
    report = check_calm_smooth_base(_as_equation(instance), ctx.options.get('gamma', 0.1), ctx.schedule)
    return CommandResult(report.verdict, smooth_base_to_dict(report))


def run_track(instance, ctx: RunContext) -> CommandResult:
    prob = _as_equation(instance)
    settings = dict(ctx.tracker)
    p = settings.pop('p', None)
    if p is None:
        p = prob.p_ref.copy()
        p[0] += 0.1
    config = TrackerConfig(c=settings.pop('c', 0.5), seed=ctx.seed, **settings)
    _, certificate = ekeland_track(prob, p, config)
    result = {'p': np.asarray(p, dtype=float).tolist(), **certificate_to_dict(certificate)}
    return CommandResult(_positive_verdict(certificate.within_bound), result,
                         {'trace.csv': trace_rows(certificate.trace)})


def run_empirical(instance, ctx: RunContext) -> CommandResult:
    kind = ctx.options.get('kind', 'calm')
    if isinstance(instance, ParamOptProblem):
        mapping, x_region, x_step = argmin_map(instance), instance.x_region, instance.resolution
    else:
        entry = BUILTINS.get(ctx.entry_name) if ctx.entry_name else None
        x_step = ctx.stability.x_step
        mapping = entry.exact() if entry is not None and entry.exact is not None else \
            solution_map(instance, x_step, workers=ctx.stability.workers)
        x_region = instance.x_region
    prob = _as_equation(instance)
    delta = ctx.grids.get('delta', ctx.stability.radius_star(prob) / 2)
    points = ctx.stability.p_points(prob)
    grid = OracleGrid(points, x_step, x_region, delta, ctx.stability.p_radius)
    estimate = empirical_modulus(mapping, kind, prob.p_ref, prob.x_ref, grid, workers=ctx.stability.workers)
    result = {'estimate': empirical_to_dict(estimate)}
    verdict = _positive_verdict(not estimate.diverging)
    if 'bound' in ctx.options:
        comparison = verdict_compare(ctx.options['bound'], estimate, ctx.stability.slack)
        result['comparison'] = comparison_to_dict(comparison)
        verdict = _positive_verdict(comparison.passed)
    return CommandResult(verdict, result, {'quotients.csv': quotient_rows(estimate.quotients)})


def run_optstab(instance, ctx: RunContext) -> CommandResult:
    if not isinstance(instance, ParamOptProblem):
        raise ConfigError("optstab needs a parametric optimization instance", 'instance')
    reports = [check_value_function_props(instance, which, ctx.optstab)
               for which in ctx.options.get('which', PROPOSITIONS)]
    table = value_table(instance, ctx.stability.validation_points(instance))
    verdict = Verdict.FAIL if any(r.verdict is Verdict.FAIL for r in reports) else Verdict.PASS
    result = {
        'propositions': [proposition_to_dict(r) for r in reports],
        'consistent': all(r.consistent for r in reports),
        'value_table': value_table_to_dict(table),
    }
    rows = [{'p': ' '.join(repr(v) for v in p), 'value': value}
            for p, value in zip(table.p_points, table.values)]
    return CommandResult(verdict, result, {'valf.csv': rows})


DISPATCH: dict[str, Callable[..., CommandResult]] = {
    'slope': run_slope,
    'check-liplsc': run_check_liplsc,
    'check-calm': run_check_calm,
    'check-calm-coderivative': run_check_calm_coderivative,
    'check-calm-smooth': run_check_calm_smooth,
    'track': run_track,
    'empirical': run_empirical,
    'optstab': run_optstab,
}


def _context(data: dict, settings: Config) -> RunContext:
    seed = data.get('seed', settings.SEED)
    schedule = RadiusSchedule(**data.get('schedule', {}), seed=seed)
    grids = {'x_step': settings.X_STEP, 'p_scales': settings.P_SCALES, **data.get('grids', {})}
    stability = StabilityConfig(
        schedule=schedule,
        workers=settings.THREADS,
        **{key: grids[key] for key in ('p_radius', 'p_scales', 'x_step', 'delta_star', 'validation_p', 'slack')
           if key in grids},
    )
    optstab = OptStabConfig(
        schedule=schedule,
        **{key: grids[key] for key in ('p_radius', 'p_scales') if key in grids},
    )
    instance = data.get('instance')
    return RunContext(seed, schedule, stability, optstab, dict(data.get('tracker', {})), grids,
                      dict(data.get('options', {})), instance if isinstance(instance, str) else None)


def _build(data: dict):
    instance = data['instance']
    if isinstance(instance, dict):
        return build_inline(instance)
    options = {k: v for k, v in data.get('options', {}).items() if k in INSTANCE_OPTIONS}
    return build_instance(instance, **options)


def run_config(data: dict, settings_name: str = 'default') -> RunReport:
    """
    Execute a validated run configuration.

    Returns:
        RunReport whose verdict determines the exit code

    Raises:
        VaristabError: on invalid instances or failing library preconditions
    """
    settings = get_settings(settings_name)
    command = data['command']
    started = time.perf_counter()
    if command == 'catalog':
        result = {'instances': [{'name': name, 'summary': summary} for name, summary in catalog_summaries()]}
        return RunReport(command, '-', data.get('seed', 0), Verdict.PASS, result)
    if isinstance(data['instance'], str):
        get_entry(data['instance'])
    ctx = _context(data, settings)
    instance = _build(data)
    logger.info("running %s on %s", command, instance.name)
    outcome = DISPATCH[command](instance, ctx)
    return RunReport(command, instance.name, ctx.seed, outcome.verdict, outcome.result, outcome.tables,
                     elapsed=time.perf_counter() - started)


@click.command(name='varistab')
@click.option('--config', 'config_path', type=click.Path(dir_okay=False), help='JSON run configuration.')
@click.option('--command', type=click.Choice(COMMANDS), help='Override the configured command.')
@click.option('--seed', type=int, help='Override the configured seed.')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), help='Directory for report files.')
@click.option('--format', 'fmt', type=click.Choice(FORMATS + ('all',)), help='Report format to write.')
@click.option('--log-level', default=None, help='Logging level (default WARNING).')
@click.pass_context
def main(ctx: click.Context, config_path, command, seed, out_dir, fmt, log_level) -> None:
    """Check stability hypotheses of parameterized generalized equations."""
    config_name = (ctx.obj or {}).get('config_name', 'default')
    settings = get_settings(config_name)
    configure_logging(log_level or settings.LOG_LEVEL)
    try:
        if config_path is None:
            if command != 'catalog':
                raise ConfigError("--config is required", 'config')
            data = {'schema': 1, 'command': 'catalog'}
        else:
            data = load_run_config(config_path)
        if command is not None:
            data['command'] = command
        if seed is not None:
            data['seed'] = seed
        data = validate_run_config(data)
        report = run_config(data, config_name)
        output = data.get('output', {})
        formats = FORMATS if fmt == 'all' else (fmt,) if fmt else tuple(output.get('formats', ('text',)))
        target = out_dir or output.get('dir')
        click.echo(render_text(report), nl=False)
        if target:
            emit_report(report, target, formats)
    except VaristabError as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(1)
    ctx.exit(report.exit_code)


if __name__ == '__main__':
    sys.exit(main())
