"""Exception and warning types shared across the pipeline."""


class GrayLithoError(ValueError):
    """Base class for validation errors raised by graylitho."""


class ClampWarning(UserWarning):
    """A value was clamped into its valid range."""


# mesh_io
class TruncatedFile(GrayLithoError):
    pass


class MeshSyntaxError(GrayLithoError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidCoordinate(GrayLithoError):
    pass


class IndexOutOfRange(GrayLithoError):
    pass


class ZeroScale(GrayLithoError):
    pass


# shapes
class FootprintOverflow(GrayLithoError):
    pass


class DepthOverflow(GrayLithoError):
    pass


# calibration
class TooFewPoints(GrayLithoError):
    pass


class NegativeDepth(GrayLithoError):
    pass


class GrayOutOfRange(GrayLithoError):
    pass


class DepthNotReachable(GrayLithoError):
    pass


# mask / tiff
class NotTiff(GrayLithoError):
    pass


class UnsupportedFeature(GrayLithoError):
    pass


# analysis
class OutOfBounds(GrayLithoError):
    pass


class GridMismatch(GrayLithoError):
    pass


class EmptyRange(GrayLithoError):
    pass


class ConfigError(GrayLithoError):
    pass
