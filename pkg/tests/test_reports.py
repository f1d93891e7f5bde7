"""Tests for run reports and their serialization."""
import json
import os

import numpy as np
import pytest

from varistab.errors import ConfigError
from varistab.reports import RunReport, clean, emit_report, quotient_rows, render_text
from varistab.stability import Verdict


@pytest.fixture
def report():
    """A small failing report with one CSV table."""
    return RunReport(
        command='empirical',
        instance='sqrt_epigraph',
        seed=7,
        verdict=Verdict.FAIL,
        result={'estimate': {'value': float('inf'), 'p': np.array([0.5])}},
        tables={'quotients.csv': [{'p': '0.5', 'distance': 0.5, 'quotient': 1.4142}]},
    )


class TestClean:
    """Tests for JSON-safe conversion."""

    def test_infinities(self):
        assert clean(float('inf')) == '+inf'
        assert clean(-np.inf) == '-inf'

    def test_nan_is_null(self):
        assert clean(float('nan')) is None

    def test_nested_numpy(self):
        """Test that arrays and numpy scalars inside containers become plain values."""
        value = clean({'a': np.array([1.0, np.inf]), 'b': (np.int64(2), np.bool_(True)), 'c': Verdict.PASS})

        assert value == {'a': [1.0, '+inf'], 'b': [2, True], 'c': 'Pass'}


class TestRunReport:
    """Tests for the report envelope."""

    def test_to_dict(self, report):
        data = report.to_dict()

        assert list(data) == ['schema', 'toolkit', 'version', 'command', 'instance', 'seed', 'verdict',
                              'exit_code', 'result']
        assert data['verdict'] == 'Fail'
        assert data['exit_code'] == 2
        assert data['result']['estimate'] == {'value': '+inf', 'p': [0.5]}

    def test_render_text(self, report):
        text = render_text(report)

        assert 'verdict: Fail (exit code 2)' in text
        assert 'empirical on sqrt_epigraph (seed 7)' in text

    def test_quotient_rows(self):
        rows = quotient_rows([{'p': [0.5, -0.25], 'distance': 0.5, 'quotient': 2.0}])

        assert rows == [{'p': '0.5 -0.25', 'distance': 0.5, 'quotient': 2.0}]


class TestEmitReport:
    """Tests for writing report files."""

    def test_writes_all_formats(self, report, tmp_path):
        """Test that text, JSON and every CSV table are written."""
        out_dir = str(tmp_path / 'out')
        written = emit_report(report, out_dir)

        assert [os.path.basename(p) for p in written] == ['report.txt', 'report.json', 'quotients.csv']
        with open(os.path.join(out_dir, 'report.json')) as handle:
            assert json.load(handle)['instance'] == 'sqrt_epigraph'
        with open(os.path.join(out_dir, 'quotients.csv')) as handle:
            assert handle.read().splitlines() == ['p,distance,quotient', '0.5,0.5,1.4142']

    def test_json_only(self, report, tmp_path):
        written = emit_report(report, str(tmp_path), formats=('json',))

        assert [os.path.basename(p) for p in written] == ['report.json']

    def test_unknown_format(self, report, tmp_path):
        with pytest.raises(ConfigError):
            emit_report(report, str(tmp_path), formats=('xml',))
