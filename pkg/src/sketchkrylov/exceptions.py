"""Exception types raised by the solvers and helpers."""


class DimensionError(ValueError):
    """Operand shapes do not agree."""


class BreakdownError(ArithmeticError):
    """A Krylov recurrence or factorization cannot continue.

    Raised for non-finite matrix-vector products and exactly singular
    reduced systems.
    """


class ZeroPivotError(ArithmeticError):
    """ILU(0) met a zero or negligible pivot."""


class MatrixMarketError(ValueError):
    """Malformed Matrix Market input.

    The offending (1-based) line number is kept in ``lineno`` when known.
    """

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
