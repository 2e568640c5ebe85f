"""Exception hierarchy shared by all dauval modules."""


class DauvalError(Exception):
    """Base class for all dauval errors."""


class ParseError(DauvalError):
    """A file could not be parsed. Carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(DauvalError):
    """Input data violates an invariant (negative DAU, duplicate rows, gaps)."""


class CoverageError(DauvalError):
    """A time series does not cover the window an operation requires."""


class DegenerateInputError(DauvalError):
    """Input is structurally valid but degenerate (e.g. all-zero denominator)."""


class InsufficientDataError(DauvalError):
    """Not enough usable points for a fit or an estimate."""


class NoDecayError(DauvalError):
    """A tail fit produced a non-decaying (slope >= 0) power law."""


class FitFailureError(DauvalError):
    """Nonlinear fit did not converge. Carries best-so-far parameters."""

    def __init__(self, message, best_params=None, diagnostics=None):
        super().__init__(message)
        self.best_params = best_params
        self.diagnostics = diagnostics or {}


class ConfidenceFailureError(DauvalError):
    """Too many bootstrap refits failed to produce a confidence value."""
