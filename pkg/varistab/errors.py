"""Exceptions raised by the varistab toolkit."""
from typing import Optional


class VaristabError(Exception):
    """Base class for every error the toolkit raises."""


class ContractViolation(VaristabError, ValueError):
    """A precondition of an operation does not hold."""


class NoProjection(VaristabError):
    """Projection requested onto an empty set."""


class BudgetExceeded(VaristabError):
    """A grid would exceed the configured point budget."""

    def __init__(self, points: int, budget: int) -> None:
        super().__init__(f"grid of {points} points exceeds budget of {budget}")
        self.points = points
        self.budget = budget


class DomainError(VaristabError, ValueError):
    """A function is infinite where a finite value is required."""


class NotOnGraph(VaristabError):
    """A dual object was requested at a point off the graph."""


class Unsupported(VaristabError):
    """The input lies outside what an exact routine can handle."""


class NoSolutionFound(VaristabError):
    """The descent tracker hit its step floor without reaching tolerance."""

    def __init__(self, message: str, trace: Optional[list] = None) -> None:
        super().__init__(message)
        self.trace = trace or []


class ConfigError(VaristabError):
    """A run configuration failed to parse or validate."""

    def __init__(self, message: str, field: str = '', line: Optional[int] = None) -> None:
        location = field or (f'line {line}' if line is not None else '')
        super().__init__(f"{location}: {message}" if location else message)
        self.field = field
        self.line = line
