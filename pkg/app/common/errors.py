"""Error hierarchy shared by every geometry module."""


class GeometryError(ValueError):
    """Base class; the CLI maps it to exit code 2 and the API to HTTP 400."""


class OriginNotInterior(GeometryError):
    pass


class PointNotInterior(GeometryError):
    pass


class ZeroDirection(GeometryError):
    pass


class DegenerateBody(GeometryError):
    pass


class DimensionMismatch(GeometryError):
    pass


class WrongDimension(GeometryError):
    pass


class CurvatureDegenerate(GeometryError):
    pass


class UnsupportedBody(GeometryError):
    """The operation needs a closed form this body kind does not have."""


class InvalidBodySpec(GeometryError):
    pass


class InvalidConfig(GeometryError):
    """Bad experiment configuration (unknown tolerance name, bad resolution, ...)."""
