"""Exception types raised across the package."""


class DecimateError(Exception):
    """Base class for all errors raised by pcdecimate."""


class CloudError(DecimateError, ValueError):
    """The input is not a valid point cloud (shape, dtype or non-finite values)."""


class EmptyCloudError(CloudError):
    pass


class InvalidRangeError(DecimateError, ValueError):
    pass


class NotOrthonormalError(DecimateError, ValueError):
    pass


class PointOutsideBoxError(DecimateError, ValueError):
    pass


class CoordinateRangeError(DecimateError, ValueError):
    """A normalized coordinate fell outside [-1, 1]."""


class ConfigError(DecimateError, ValueError):
    pass


class MaxPassesExceeded(DecimateError, RuntimeError):
    pass


class DeterminismError(DecimateError, RuntimeError):
    """Two repetitions of the same benchmark cell produced different clouds."""


class PcdError(DecimateError):
    """Base class for PCD parse failures; ``offset`` is the byte position of the fault."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)


class PcdHeaderError(PcdError):
    pass


class PcdTruncatedError(PcdError):
    pass


class PcdUnsupportedError(PcdError):
    pass


class PcdBodyError(PcdError):
    """An ASCII data row holds a value that is not a number."""
