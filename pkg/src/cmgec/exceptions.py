"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class ContractViolationError(ValueError):
    """An argument breaks a documented precondition (shape, symmetry, range)."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class DataError(ValueError):
    """Malformed dataset files or inconsistent dataset contents."""


class NumericalError(RuntimeError):
    """Numerical breakdown: divergence, NaN loss, eigensolver failure."""


class NotFittedError(RuntimeError):
    """Estimator attribute accessed before fit()."""
