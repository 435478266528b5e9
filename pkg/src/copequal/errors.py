"""Exception types shared across the package."""


class CopequalError(Exception):
    """Base class for all package-specific errors."""


class ParameterDomainError(CopequalError, ValueError):
    """A copula parameter lies outside its admissible domain."""


class DomainError(CopequalError, ValueError):
    """An evaluation point lies outside the unit cube or an admissible range."""


class DataError(CopequalError, ValueError):
    """Input data is malformed (NaN, wrong shape, too few rows)."""


class DimensionMismatchError(CopequalError, ValueError):
    """Two operands do not share the same column dimension."""


class ConvergenceError(CopequalError, RuntimeError):
    """A numeric inversion failed to converge."""


class ResourceLimitError(CopequalError, RuntimeError):
    """A requested computation exceeds a configured size cap."""


class InputError(CopequalError, ValueError):
    """A generic invalid argument (bad permutation, degenerate sizes, ...)."""
