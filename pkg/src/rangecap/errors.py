"""Exception types raised across the package."""


class RangecapError(Exception):
    """Base class for all package errors."""


class ValidationError(RangecapError, ValueError):
    """Invalid user input (group spec, config, element, window...)."""


class NonSymmetricGenerators(ValidationError):
    pass


class DuplicateGenerator(ValidationError):
    pass


class EmptyGeneratorSet(ValidationError):
    pass


class DegenerateGenerators(ValidationError):
    pass


class WindowOutOfBounds(ValidationError):
    pass


class InsufficientCounts(ValidationError):
    pass


class TooManyLevels(ValidationError):
    pass


class ResourceCapError(RangecapError):
    """A memory/size cap was hit."""


class BallTooLarge(ResourceCapError):
    """Ball enumeration exceeded the element cap.

    ``radius_reached`` is the largest radius whose ball was fully enumerated.
    """

    def __init__(self, cap, radius_reached):
        super().__init__(
            f"ball enumeration exceeded cap of {cap} elements "
            f"(complete up to radius {radius_reached})"
        )
        self.cap = cap
        self.radius_reached = radius_reached


class NonConvergence(RangecapError):
    pass
