"""Exception types raised across the package."""


class SSDAError(Exception):
    """Base class for all package errors."""


class DomainError(SSDAError, ValueError):
    """Argument outside the mathematical domain of a function."""


class InsufficientClassDataError(SSDAError, ValueError):
    """A class is missing or has too few observations to be estimated."""


class LegacyDegenerateError(SSDAError, ArithmeticError):
    """The legacy mean estimator has no negative-class point inside (a, b)."""

    def __init__(self, feature: int):
        self.feature = feature
        super().__init__(
            f"feature {feature}: no negative-class observation has F+(x) in (a, b); "
            "the legacy mean estimate is undefined"
        )


class DegenerateProjectionError(SSDAError, ArithmeticError):
    """(mu_plus - mu_minus)' beta is zero, so the intercept is undefined."""


class FoldConstructionError(SSDAError, ValueError):
    """Stratified folds cannot keep both classes in every fold."""


class ConvergenceError(SSDAError, RuntimeError):
    """Coordinate descent hit its sweep cap."""


class DimensionMismatchError(SSDAError, ValueError):
    """Feature count of the input does not match the fitted model."""


class CsvParseError(SSDAError, ValueError):
    """Malformed CSV input; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class ModelFormatError(SSDAError, ValueError):
    """A serialized model file is unreadable or has an unknown version."""
