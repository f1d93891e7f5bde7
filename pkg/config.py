"""Configuration classes for the varistab toolkit."""
import os
from typing import ClassVar


def get_thread_count() -> int:
    """
    Get the worker cap for grid sweeps.

    VARISTAB_THREADS caps the number of threads used by solve_on_grid,
    value tables and oracle sweeps. Unset or empty means a single worker.
    """
    raw = os.environ.get('VARISTAB_THREADS', '').strip()
    if not raw:
        return 1
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"VARISTAB_THREADS must be an integer, got {raw!r}")


class Config:
    """Base configuration with common settings."""

    TOL_FEAS: ClassVar[float] = 1e-9
    TOL_PROJ: ClassVar[float] = 1e-9
    TOL_SOLUTION: ClassVar[float] = 1e-6
    TRACKER_TOL: ClassVar[float] = 1e-8
    GRID_BUDGET: ClassVar[int] = 10**7
    VALIDATION_SLACK: ClassVar[float] = 0.05
    KAPPA_INFLATION: ClassVar[float] = 0.10
    SEED: ClassVar[int] = 0

    # Default radius schedule
    EPS0: ClassVar[float] = 0.1
    DECAY: ClassVar[float] = 0.5
    LEVELS: ClassVar[int] = 4
    SAMPLES_PER_LEVEL: ClassVar[int] = 64

    # Default grids
    X_STEP: ClassVar[float] = 0.01
    P_SCALES: ClassVar[int] = 10

    LOG_LEVEL: str = os.environ.get('VARISTAB_LOG_LEVEL', 'WARNING')

    def __init__(self) -> None:
        self.THREADS: int = get_thread_count()
        if self.THREADS < 1:
            raise ValueError("VARISTAB_THREADS must be at least 1")
        for name in ('TOL_FEAS', 'TOL_PROJ', 'TOL_SOLUTION', 'TRACKER_TOL'):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class DefaultConfig(Config):
    """Settings for command-line runs."""


class TestingConfig(Config):
    """Smaller grids for the test suite."""

    X_STEP: ClassVar[float] = 0.02
    P_SCALES: ClassVar[int] = 8


config = {
    'default': DefaultConfig,
    'testing': TestingConfig,
}
