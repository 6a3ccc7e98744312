"""Exception types raised across the package.

Every error subclasses :class:`MinudescError`, which is itself a
``ValueError`` so callers that only care about bad input can catch that.
"""


class MinudescError(ValueError):
    pass


class InvalidParameterError(MinudescError):
    pass


class EmptyForegroundError(MinudescError):
    pass


class InsufficientSamplesError(MinudescError):
    pass


class TooFewClassesError(MinudescError):
    pass


class TooFewSamplesPerClassError(MinudescError):
    pass


class DegenerateScatterError(MinudescError):
    pass


class DimensionMismatchError(MinudescError):
    pass


class EmptyTemplateError(MinudescError):
    pass


class InsufficientDataError(MinudescError):
    pass


class EmptyScoresError(MinudescError):
    pass


class PlacementError(MinudescError):
    """Raised when minutiae cannot be planted with the requested spacing."""

    def __init__(self, message, achieved=0):
        super().__init__(message)
        self.achieved = achieved


class MalformedFileError(MinudescError):
    pass


class VersionMismatchError(MinudescError):
    pass


class ConfigError(MinudescError):
    pass
