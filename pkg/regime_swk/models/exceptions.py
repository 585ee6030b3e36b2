"""
Custom exceptions for the regime_swk models layer.

These exceptions are framework-agnostic and are converted to process exit
codes by the command-line entry point.
"""


class RegimeSwkError(Exception):
    """Base exception for regime_swk operations."""
    exit_code: int = 4

    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


# =============================================================================
# Configuration errors (exit code 2)
# =============================================================================

class ConfigError(RegimeSwkError):
    """Raised when a run or experiment configuration is invalid."""
    exit_code = 2


class ParameterError(ConfigError):
    """Raised when generator parameters describe an impossible distribution."""
    pass


# =============================================================================
# Data errors (exit code 3)
# =============================================================================

class DataError(RegimeSwkError):
    """Base class for problems with the input data."""
    exit_code = 3


class DomainError(DataError):
    """Raised when a price is not strictly positive."""
    def __init__(self, row: int, column: int, value: float):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"Price at row {row}, coordinate c{column} must be > 0, got {value!r}")


class DegenerateInputError(DataError):
    """Raised when a coordinate has zero variance and cannot be standardized."""
    def __init__(self, column: int):
        self.column = column
        super().__init__(f"Coordinate c{column} has constant log returns (zero variance)")


class InsufficientDataError(DataError):
    """Raised when there is not enough data for the requested windows or clusters."""
    pass


class ShapeError(DataError):
    """Raised when array shapes or atom counts disagree."""
    pass


class ContractError(DataError):
    """Raised when an operation needs data the caller did not supply (e.g. ground truth)."""
    pass


class SizeGuardError(DataError):
    """Raised when an exhaustive search would exceed its size limit."""
    def __init__(self, what: str, size: int, limit: int):
        self.what = what
        self.size = size
        self.limit = limit
        super().__init__(f"{what} of size {size} exceeds the exhaustive-search limit {limit}")


class EmptyClusterError(DataError):
    """Raised when a barycentre is requested for an empty family of measures."""
    def __init__(self, message: str = "Cannot compute the barycentre of an empty cluster"):
        super().__init__(message)


# =============================================================================
# Runtime errors (exit code 4)
# =============================================================================

class GenerationError(RegimeSwkError):
    """Raised when a synthetic dataset cannot be generated."""
    pass


class ArtifactIOError(RegimeSwkError):
    """Raised when an output artifact cannot be written or read."""
    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"{reason}: {path}")
