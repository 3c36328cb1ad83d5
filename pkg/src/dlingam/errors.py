"""Exception hierarchy shared by the library and the command line."""


class LingamError(Exception):
    """Base class; ``exit_code`` and ``code`` drive the CLI error line."""

    exit_code = 1
    code = "ERROR"


class DataError(LingamError, ValueError):
    """Malformed or unreadable input, such as a CSV parse failure or a bad prior matrix."""

    exit_code = 3
    code = "IO"


class NumericalError(LingamError, ArithmeticError):
    """A numerical precondition failed, typically zero variance or a singular design."""

    exit_code = 4
    code = "NUMERIC"


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap
