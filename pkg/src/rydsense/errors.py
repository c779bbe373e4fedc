"""Exception hierarchy. Exit codes used by the CLI are attached per class."""


class RydsenseError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class SchemeError(RydsenseError):
    """Scheme file cannot be parsed or violates an invariant."""

    exit_code = 3


class IngestError(RydsenseError):
    """Data file cannot be parsed into a trace."""

    exit_code = 3


class SolverError(RydsenseError):
    """Steady-state or time-evolution failure."""

    exit_code = 4


class DegenerateSteadyStateError(SolverError):
    """Liouvillian null space has dimension > 1."""


class AnalysisError(RydsenseError):
    """Peak extraction, calibration, or trace analysis failure."""

    exit_code = 5
