"""
Laboratory Exceptions

Every failure carries a human-readable detail and the process exit code the
command line maps it to (2 for configuration problems, 3 for numerical ones).
"""


class LabError(Exception):
    """Base error with an exit code, in the spirit of an HTTP status."""

    exit_code = 1

    def __init__(self, detail: str, exit_code: int | None = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class ConfigError(LabError):
    """Invalid input, precondition violation or unusable configuration."""

    exit_code = 2


class GaugeError(ConfigError):
    """A measuring function violates one of its invariants."""


class OutputCollisionError(ConfigError):
    """An artifact directory already exists and --force was not given."""


class NumericalError(LabError):
    """A numerical procedure failed to deliver a trustworthy value."""

    exit_code = 3


class DivergentIntegralError(NumericalError):
    """An integral required to be finite diverges."""


class RootBracketError(NumericalError):
    """A monotone equation could not be bracketed in the search range."""


class ConvergenceError(NumericalError):
    """An iteration hit its cap; the last residual is kept for reporting."""

    def __init__(self, detail: str, residual: float):
        super().__init__(detail)
        self.residual = residual


class ConstructionError(NumericalError):
    """A geometric construction broke one of its invariants."""
