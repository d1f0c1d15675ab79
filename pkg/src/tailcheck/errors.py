"""Exception hierarchy shared across the package."""


class TailcheckError(Exception):
    """Base class for all package errors."""


class ConfigError(TailcheckError, ValueError):
    """Invalid parameter or configuration (k too small, alpha out of range, ...)."""


class DomainError(TailcheckError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DegenerateSpacingsError(TailcheckError, ValueError):
    """Top order statistics have zero range, so spacings cannot be normalized.

    Usually caused by heavy ties in the tail of the covariate.
    """


class InsufficientTailError(TailcheckError, ValueError):
    """The outcome subsample holds fewer than ``k`` observations."""

    def __init__(self, n_subsample: int, k: int, label: str = ""):
        self.n_subsample = n_subsample
        self.k = k
        where = f" ({label})" if label else ""
        super().__init__(
            f"insufficient tail{where}: subsample has n0={n_subsample} "
            f"observations but k={k} were requested"
        )


class NumericError(TailcheckError, ArithmeticError):
    """Quadrature or another numerical routine failed to reach its tolerance."""

    def __init__(self, message: str, error_estimate: float = float("nan")):
        self.error_estimate = error_estimate
        super().__init__(f"{message} (error estimate {error_estimate:.3g})")


class ValidationError(TailcheckError, ValueError):
    """Input data failed validation (bad outcome values, mismatched lengths, ...)."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(message if row is None else f"row {row}: {message}")


class SchemaError(ValidationError):
    """A required input column is missing."""

    def __init__(self, column: str):
        self.column = column
        super().__init__(f"missing column {column!r}")
