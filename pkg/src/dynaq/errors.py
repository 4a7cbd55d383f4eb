"""Exception taxonomy shared across the package."""


class DynaqError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(DynaqError):
    """Raised when an input file does not match its declared schema."""


class DegeneratePoolError(DynaqError):
    """Raised when a labeled pool contains a single class where two are required."""


class DegenerateModelError(DynaqError):
    """Raised when a model cannot be fit (e.g. fewer than 2 training rows)."""


class UndefinedMetricError(DynaqError):
    """Raised when a metric is requested on an empty or invalid subset."""


class UndefinedTestError(DynaqError):
    """Raised when a statistical test has no defined answer for the input."""


class PoolExhaustedError(DynaqError):
    """Raised when the unlabeled pool is too small to fill a query batch."""


class TuningInfeasibleError(DynaqError):
    """Raised when hyperparameter tuning cannot form valid inner partitions."""
