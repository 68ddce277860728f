"""Exception hierarchy. The CLI maps each class to a stable exit code."""


class RevarError(Exception):
    exit_code = 1


class FormatError(RevarError):
    """Malformed, truncated or unrecognised file contents."""

    exit_code = 2


class ValidationError(RevarError, ValueError):
    """Inputs violate a documented precondition."""

    exit_code = 3


class NumericalError(RevarError, ArithmeticError):
    """Degenerate or unstable numerics (singular covariance, unstable VAR, ...)."""

    exit_code = 4
