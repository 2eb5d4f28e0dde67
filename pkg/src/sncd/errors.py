"""Exception hierarchy."""


class SncdError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SncdError, ValueError):
    """Input data or configuration failed validation."""


class EmptyData(ValidationError):
    def __init__(self, msg="table has no data rows"):
        super().__init__(msg)


class RaggedRows(ValidationError):
    def __init__(self, row, expected, got):
        self.row, self.expected, self.got = row, expected, got
        super().__init__(f"row {row} has {got} columns, expected {expected}")


class NonFiniteEntry(ValidationError):
    def __init__(self, row, col):
        self.row, self.col = row, col
        super().__init__(f"non-finite or missing entry at row {row}, column {col}")


class MalformedEntry(ValidationError):
    def __init__(self, row, col, text):
        self.row, self.col, self.text = row, col, text
        super().__init__(f"cannot parse {text!r} at row {row}, column {col} as a number")


class DimensionMismatch(ValidationError):
    pass


class InvalidParameter(ValidationError):
    pass


class AlphaZero(InvalidParameter):
    def __init__(self):
        super().__init__("alpha must be in (0, 1]; pure ridge (alpha=0) is not supported, use e.g. 1e-3")


class TooFewObservations(ValidationError):
    pass


class SingularSystem(SncdError):
    """The reduced Newton system of the full semismooth Newton solver is singular."""


class NonFiniteIterate(SncdError):
    """An iterate became NaN or infinite."""
