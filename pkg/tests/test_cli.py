"""Tests for run configurations and the command-line entry point."""
import json
import os

import pytest

from varistab.cli import load_run_config, main, run_config, validate_run_config
from varistab.errors import ConfigError
from varistab.stability import Verdict

AFFINE_INLINE = {
    'name': 'inline_affine',
    'base': ['x - p'],
    'field': {'type': 'singleton', 'point': [0]},
    'p_ref': [0],
    'x_ref': [0],
    'p_region': [[-1, 1]],
    'x_region': [[-2, 2]],
}


class TestValidateRunConfig:
    """Tests for schema validation."""

    def test_minimal_catalog(self):
        data = {'schema': 1, 'command': 'catalog'}

        assert validate_run_config(data) is data

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError) as excinfo:
            validate_run_config({'schema': 1, 'command': 'catalog', 'colour': 'red'})

        assert excinfo.value.field == '<root>'

    def test_nested_field_path(self):
        """Test that the error names the offending field."""
        with pytest.raises(ConfigError) as excinfo:
            validate_run_config({'schema': 1, 'command': 'slope', 'instance': 'affine_tracking',
                                 'schedule': {'levels': 2}})

        assert excinfo.value.field == 'schedule.levels'

    def test_wrong_schema_version(self):
        with pytest.raises(ConfigError):
            validate_run_config({'schema': 2, 'command': 'catalog'})

    def test_instance_required(self):
        """Test that every command but catalog needs an instance."""
        with pytest.raises(ConfigError) as excinfo:
            validate_run_config({'schema': 1, 'command': 'slope'})

        assert excinfo.value.field == 'instance'


class TestLoadRunConfig:
    """Tests for reading configuration files."""

    def test_syntax_error_has_line(self, write_config):
        path = write_config('{\n  "schema": 1,\n  "command" "catalog"\n}')

        with pytest.raises(ConfigError) as excinfo:
            load_run_config(path)

        assert excinfo.value.line == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config(str(tmp_path / 'absent.json'))


class TestRunConfig:
    """Tests for executing configurations without the CLI."""

    def test_catalog(self):
        report = run_config({'schema': 1, 'command': 'catalog'})

        assert report.verdict is Verdict.PASS
        assert len(report.result['instances']) == 7

    def test_track_inline(self):
        """Test the tracker on an inline x - p = 0."""
        report = run_config({'schema': 1, 'command': 'track', 'instance': AFFINE_INLINE,
                             'tracker': {'p': [0.3], 'c': 0.5}})

        assert report.instance == 'inline_affine'
        assert report.verdict is Verdict.PASS
        assert report.result['x_hat'] == pytest.approx([0.3], abs=1e-6)
        assert 'trace.csv' in report.tables

    def test_testing_settings_use_coarser_grid(self):
        """Test that the testing configuration supplies its x-step when grids are not given."""
        report = run_config({'schema': 1, 'command': 'empirical', 'instance': 'sqrt_epigraph',
                             'options': {'kind': 'liplsc'}}, 'testing')

        assert report.result['estimate']['x_step'] == 0.02
        assert report.verdict is Verdict.FAIL

    def test_optstab_needs_optimization_instance(self):
        with pytest.raises(ConfigError):
            run_config({'schema': 1, 'command': 'optstab', 'instance': 'affine_tracking'})


class TestMain:
    """Tests for the click command."""

    def test_catalog_without_config(self, cli_runner):
        result = cli_runner.invoke(main, ['--command', 'catalog', '--seed', '5'])

        assert result.exit_code == 0
        assert 'quad_box' in result.output
        assert '(seed 5)' in result.output

    def test_config_required(self, cli_runner):
        result = cli_runner.invoke(main, ['--command', 'slope'])

        assert result.exit_code == 1
        assert 'error:' in result.output

    def test_invalid_config_exits_1(self, cli_runner, write_config):
        path = write_config({'schema': 1, 'command': 'slope', 'instance': 'no_such_instance'})
        result = cli_runner.invoke(main, ['--config', path])

        assert result.exit_code == 1
        assert 'no_such_instance' in result.output

    def test_track_writes_reports(self, cli_runner, write_config, tmp_path):
        """Test a passing run writing text, JSON and CSV files."""
        path = write_config({'schema': 1, 'command': 'track', 'instance': 'affine_tracking',
                             'tracker': {'p': [0.3], 'c': 0.5}})
        out_dir = tmp_path / 'out'
        result = cli_runner.invoke(main, ['--config', path, '--out', str(out_dir), '--format', 'all'])

        assert result.exit_code == 0
        assert sorted(os.listdir(out_dir)) == ['report.json', 'report.txt', 'trace.csv']
        with open(out_dir / 'report.json') as handle:
            data = json.load(handle)
        assert data['verdict'] == 'Pass'
        assert data['result']['within_bound'] is True

    def test_failing_verdict_exit_code(self, cli_runner, write_config):
        """Test that a diverging empirical modulus exits with code 2."""
        path = write_config({'schema': 1, 'command': 'empirical', 'instance': 'sqrt_epigraph',
                             'options': {'kind': 'liplsc'}})
        result = cli_runner.invoke(main, ['--config', path])

        assert result.exit_code == 2
        assert 'verdict: Fail' in result.output

    def test_repeated_run_is_byte_identical(self, cli_runner, write_config, tmp_path):
        """Test that the same configuration and seed give the same report.json bytes."""
        path = write_config({'schema': 1, 'command': 'track', 'instance': 'affine_tracking', 'seed': 11,
                             'tracker': {'p': [0.3], 'c': 0.5}})
        outputs = []
        for name in ('first', 'second'):
            out_dir = tmp_path / name
            result = cli_runner.invoke(main, ['--config', path, '--out', str(out_dir), '--format', 'json'])
            assert result.exit_code == 0
            outputs.append((out_dir / 'report.json').read_bytes())

        assert outputs[0] == outputs[1]
