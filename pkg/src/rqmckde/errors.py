"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    """An argument violates a documented precondition."""


class UnsupportedDimension(InvalidArgument):
    """Requested dimension exceeds the shipped direction-number table."""


class DomainError(ValueError):
    """A numeric input lies outside the domain of a function."""


class DegenerateSample(ValueError):
    """A sample has zero spread, so scale-based estimates are undefined."""
