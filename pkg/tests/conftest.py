"""Pytest configuration and fixtures."""
import json

import pytest
from click.testing import CliRunner

from varistab.catalog import build_instance
from varistab.slopes_dual import RadiusSchedule
from varistab.stability import StabilityConfig


@pytest.fixture
def schedule():
    """Default radius schedule: 0.1, 0.05, 0.025, 0.0125 with 64 samples."""
    return RadiusSchedule()


@pytest.fixture
def stability_config(schedule):
    """Checker settings on the default grids."""
    return StabilityConfig(schedule=schedule)


@pytest.fixture
def affine():
    """x - p = 0 at (0, 0)."""
    return build_instance('affine_tracking')


@pytest.fixture
def sqrt_epigraph():
    return build_instance('sqrt_epigraph')


@pytest.fixture
def halfline_jump():
    return build_instance('halfline_jump')


@pytest.fixture
def bilinear():
    return build_instance('bilinear_field')


@pytest.fixture
def quad_box():
    return build_instance('quad_box')


@pytest.fixture
def cli_runner():
    """Click CLI test runner."""
    return CliRunner()


@pytest.fixture
def write_config(tmp_path):
    """Write a run configuration to a temporary file and return its path."""
    def write(data, name='run.json'):
        path = tmp_path / name
        path.write_text(data if isinstance(data, str) else json.dumps(data))
        return str(path)
    return write
