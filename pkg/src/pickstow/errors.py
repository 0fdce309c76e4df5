"""Exception types raised across the package."""


class PickStowError(Exception):
    """Base class for all package errors."""


class SingularityError(PickStowError):
    """A Gram matrix needed for an explicit inverse is numerically singular."""


class DegenerateGeometryError(PickStowError):
    """Point sets are collinear or coincident, so a rotation is not defined."""


class ParallelLinesError(PickStowError):
    pass


class InsufficientLinesError(PickStowError):
    pass


class ItemNotFoundError(PickStowError):
    """The queried item is absent from the scene (or has no visible pixels)."""


class EmptyRegionError(PickStowError):
    pass


class NoEvidenceError(PickStowError):
    """No pixel in a probability map clears the classification threshold."""


class InvalidDepthError(PickStowError):
    pass


class InfeasibleGoalError(PickStowError):
    pass


class StartInCollisionError(PickStowError):
    pass


class SchemaError(PickStowError):
    """A work order or config document does not match its schema."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ConsistencyError(PickStowError):
    pass


class ConfigError(PickStowError):
    pass
