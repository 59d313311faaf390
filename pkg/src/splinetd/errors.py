"""Exception types shared across the package."""


class SplineTDError(Exception):
    """Base class for all package-specific errors."""


class OutOfDomain(SplineTDError):
    """A query point lies outside every simplex of the triangulation."""


class InvalidGrid(SplineTDError):
    """Grid breakpoints are unsorted, duplicated, or too few."""


class InvalidTriangulation(SplineTDError):
    """Triangulation violates a structural invariant (degenerate simplex,
    facet shared by more than two simplices, coverage gap, ...)."""


class InvalidParam(SplineTDError):
    """A physical or algorithmic parameter is out of its admissible range."""


class NumericalFailure(SplineTDError):
    """A numerical operation failed (singular update denominator,
    non-finite input, SVD non-convergence)."""


class EstimatorDiverged(NumericalFailure):
    """Coefficient norm exploded; the surrounding trial should be flagged
    and abandoned instead of poisoning the whole experiment."""


class ConfigError(SplineTDError):
    """Configuration file is missing, malformed, or inconsistent."""
