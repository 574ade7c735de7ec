"""Exception hierarchy shared by all modules.

Every error raised on purpose derives from :class:`NresolvedError` so callers
(and the CLI) can separate numerical diagnostics from programming mistakes.
"""

from __future__ import annotations


class NresolvedError(Exception):
    """Base class for all diagnostics raised by the package."""


# numkit
class SingularMatrix(NresolvedError):
    pass


class Overflow(NresolvedError):
    pass


class NoConvergence(NresolvedError):
    pass


class DegenerateDominant(NresolvedError):
    pass


class Inconsistent(NresolvedError):
    pass


class MaxSubdivisions(NresolvedError):
    pass


# liouville
class DimensionMismatch(NresolvedError, ValueError):
    pass


class TraceLeak(NresolvedError):
    pass


class DegenerateSteadyState(NresolvedError):
    pass


class NotPositive(NresolvedError):
    pass


# observables
class SingularResolvent(NresolvedError):
    pass


class DivergentNoise(NresolvedError):
    """Zero-frequency noise blows up; ``growth`` holds ‖y‖/‖s‖."""

    def __init__(self, message: str, growth: float):
        super().__init__(message)
        self.growth = growth


class GridMismatch(NresolvedError, ValueError):
    pass


class NoPeak(NresolvedError):
    pass


class NoTransport(NresolvedError):
    pass


# counting
class WindowOverflow(NresolvedError):
    pass


class StencilInstability(NresolvedError):
    pass


# scba
class ProportionalityViolated(NresolvedError):
    pass


class NoFixedPoint(NresolvedError):
    def __init__(self, message: str, history: list[float]):
        super().__init__(message)
        self.history = history


# oracles
class DomainError(NresolvedError, ValueError):
    pass


# cli
class SchemaError(NresolvedError):
    """Configuration problems; ``problems`` lists every violation found."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)
