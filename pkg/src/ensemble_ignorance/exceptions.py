"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input failed a structural or domain check."""


class DomainError(ValidationError):
    """Special-function argument outside the supported domain."""


class EnsembleSizeError(ValidationError):
    """Ensemble too small for the requested estimator."""

    def __init__(self, size, minimum, estimator=None):
        self.size = size
        self.minimum = minimum
        what = f" for the {estimator} estimator" if estimator else ""
        super().__init__(
            f"ensemble size {size} is below the minimum ensemble size {minimum}{what}"
        )


class DegenerateEnsembleError(ArithmeticError):
    """All ensemble members are identical, so the fitted variance is zero."""

    def __init__(self, message, rows=()):
        self.rows = tuple(rows)
        super().__init__(message)


class OutOfSupportError(ValueError):
    """Density evaluated outside the support of the distribution."""


class IngestionError(ValidationError):
    """Malformed verification CSV, with row/column diagnostics."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
