"""Exception types shared across the package.

Each class carries the CLI exit code it maps to.
"""


class GoldenRuleError(Exception):
    exit_code = 3


class ParameterError(GoldenRuleError, ValueError):
    """Invalid physical parameters (non-finite, negative spacing, ...)."""

    exit_code = 1


class DomainError(GoldenRuleError, ValueError):
    """Argument outside the domain of an operation (negative time, bad grid)."""

    exit_code = 1


class NumericalError(GoldenRuleError, RuntimeError):
    """A numerical routine failed to converge or lost accuracy."""

    exit_code = 3

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class AnalysisError(GoldenRuleError, ValueError):
    """Input curve unsuitable for the requested analysis."""

    exit_code = 3
