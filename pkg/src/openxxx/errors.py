"""Exception types shared across the package."""


class OpenXXXError(Exception):
    """Base class for all package errors."""


class DimensionError(OpenXXXError):
    """Matrix or tensor dimensions are inconsistent or exceed the dense cap."""


class PoleError(OpenXXXError):
    """A spectral parameter or Bethe root fell inside a pole guard."""


class ParameterError(OpenXXXError):
    """Model or solver parameters violate an invariant."""


class FrameUnavailableError(OpenXXXError):
    """The rotated (diagonalized left boundary) frame does not exist for these couplings."""


class DegenerateBasisError(OpenXXXError):
    """A coefficient-extraction basis is numerically rank deficient."""


class ContractionError(OpenXXXError):
    """A lowering-operator string left weight outside the expected sector."""


class TrackingError(OpenXXXError):
    """Eigenvalue branch tracking could not be disambiguated."""


class ConfigError(OpenXXXError):
    """A run configuration file is malformed or inconsistent."""
