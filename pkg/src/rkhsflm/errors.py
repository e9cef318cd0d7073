"""Exception types shared across the package."""


class ArgumentError(ValueError):
    """Invalid argument: wrong size, out-of-range parameter, empty input."""


class DomainError(ValueError):
    """A query falls outside the set where the object is defined."""


class NumericError(ArithmeticError):
    """A factorization or eigensolver failed."""


class ParseError(ValueError):
    """Malformed dataset or config file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
