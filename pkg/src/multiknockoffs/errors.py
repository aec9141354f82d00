"""Exception hierarchy.

Validation errors (bad shapes, bad configuration, violated preconditions)
derive from :class:`ValidationError`; failures of a numerical routine on
otherwise well-formed input derive from :class:`NumericalError`.  The CLI
maps the two families onto distinct exit codes.
"""


class KnockoffError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(KnockoffError, ValueError):
    pass


class NumericalError(KnockoffError, ArithmeticError):
    pass


class NotSymmetricError(ValidationError):
    pass


class NonPositiveDiagonalError(ValidationError):
    pass


class NotPositiveDefiniteError(NumericalError):
    pass


class EigenFailure(NumericalError):
    pass


class CholeskyFailure(NumericalError):
    pass


class SolverNotConverged(NumericalError):
    pass


class DimensionMismatch(ValidationError):
    pass


class ZeroVarianceColumn(ValidationError):
    pass


class MultiplicityMismatch(ValidationError):
    pass


class EmptyInputError(ValidationError):
    pass


class NoNullFeatures(ValidationError):
    pass


class InvalidEngineForKind(ValidationError):
    pass


class ConfigParseError(ValidationError):
    """Raised for malformed or incomplete configuration files.

    ``line`` and ``field`` locate the problem when known.
    """

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class NonNumericCell(ValidationError):
    def __init__(self, path, row, col, value):
        self.row, self.col = row, col
        super().__init__(f"{path}: row {row}, column {col}: non-numeric value {value!r}")
