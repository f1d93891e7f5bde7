"""Stability checks for parameterized generalized equations."""
import logging

from config import Config, config

__version__ = '0.3.0'

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def get_settings(config_name: str = 'default') -> Config:
    """
    Create the settings object for a run.

    Args:
        config_name: Configuration name ('default', 'testing')

    Returns:
        Instantiated configuration, validated on construction
    """
    if config_name not in config:
        raise ValueError(f"Unknown configuration {config_name!r}")
    return config[config_name]()


def configure_logging(level: str = 'WARNING') -> None:
    """Attach the root handler once; library modules only create loggers."""
    logging.basicConfig(level=getattr(logging, level.upper(), logging.WARNING), format=LOG_FORMAT)
