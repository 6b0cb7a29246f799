"""Exception hierarchy shared by every module of the lab."""

from __future__ import annotations


class StlabError(Exception):
    """Base class for all lab errors."""


class NonHermitianInput(StlabError, ValueError):
    pass


class ConvergenceFailure(StlabError, RuntimeError):
    pass


class EmptySequence(StlabError, ValueError):
    pass


class WindowTooSmall(StlabError, ValueError):
    pass


class NonPositiveValues(StlabError, ValueError):
    pass


class DimensionOverflow(StlabError, ValueError):
    pass


class UnsupportedModel(StlabError, TypeError):
    pass


class OracleNotConverged(StlabError, RuntimeError):
    pass


class NotPositive(StlabError, ValueError):
    pass


class TruncationUnsafe(StlabError, ValueError):
    pass


class GridBelowAbscissa(StlabError, ValueError):
    pass


class OutOfRange(StlabError, ValueError):
    pass


class ParameterRegionViolation(StlabError, ValueError):
    pass


class QuadratureDiverged(StlabError, RuntimeError):
    pass


class ConfigParseError(StlabError, ValueError):
    pass


class ExperimentFailure(StlabError, RuntimeError):
    pass
