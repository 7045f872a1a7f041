class PolarMapError(Exception):
    """Base class for errors raised by polarmaps."""


class SingularStep(PolarMapError):
    """The step matrix is singular: the map is undefined at this state."""

    def __init__(self, message: str, det=None):
        super().__init__(message)
        self.det = det


class NonInvertibleK(PolarMapError, ValueError):
    """The first integral needs a nonsingular K."""


class OddInadmissible(PolarMapError, ValueError):
    """Odd-order system whose field fails det(I + tDf) == det(I - tDf)."""


class ConfigError(PolarMapError, ValueError):
    """Malformed problem specification."""
