"""Exception types shared across the package."""


class GrowthLabError(Exception):
    """Base class for all growthlab errors."""


class DomainError(GrowthLabError, ValueError):
    """Input point lies outside the map's domain."""


class InvalidParameterError(GrowthLabError, ValueError):
    """Family parameters violate a construction constraint."""


class InvalidSpecError(GrowthLabError):
    """A map failed a structural requirement (monotonicity, orbit escape)."""


class PrecisionError(GrowthLabError, ArithmeticError):
    """A numerical procedure cannot reach the requested accuracy."""


class ConstructionError(GrowthLabError):
    """A family constructor could not complete its search for a valid layout."""
