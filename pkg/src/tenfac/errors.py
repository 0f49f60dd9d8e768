"""Exception types raised across the package."""


class DomainError(ValueError):
    """Input violates a mathematical precondition (shape, rank, range)."""


class ResourceError(RuntimeError):
    """A requested computation exceeds a configured size cap."""


class BenchmarkError(RuntimeError):
    """Too many Monte Carlo replications failed for the report to be trusted."""
