"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: input errors exit 1, numeric errors
exit 2 and resource caps exit 3.
"""


class OkregError(Exception):
    exit_code = 1


class InputError(OkregError, ValueError):
    """Malformed or out-of-contract input."""

    exit_code = 1


class InsufficientDataError(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericError(OkregError, ArithmeticError):
    """A computation lost a property it depends on (definiteness, finiteness)."""

    exit_code = 2


class SingularMatrixError(NumericError):
    pass


class NotSPDError(NumericError):
    pass


class ConsistencyError(NumericError):
    """A cached quantity drifted away from its recomputed value."""


class ConvergenceError(NumericError):
    pass


class ResourceCapError(OkregError, RuntimeError):
    exit_code = 3


class NearSingularWarning(RuntimeWarning):
    pass
