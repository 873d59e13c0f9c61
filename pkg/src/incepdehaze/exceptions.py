"""Exception hierarchy shared by every subpackage."""


class IncepDehazeError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(IncepDehazeError, ValueError):
    """Tensor or image extents are inconsistent with an operation."""


class ContractError(IncepDehazeError, ValueError):
    """A documented precondition was violated by the caller."""


class ConfigError(IncepDehazeError, ValueError):
    """A configuration value is invalid or missing."""


class ParameterError(IncepDehazeError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class ValidationError(IncepDehazeError, ValueError):
    """Input data (files, manifests, depth values) failed validation."""


class UndefinedResultError(IncepDehazeError, ValueError):
    """The requested quantity is mathematically undefined for the input."""


class ImageFormatError(IncepDehazeError, OSError):
    """A file could not be decoded as a supported raster format."""


class NonFiniteError(IncepDehazeError, FloatingPointError):
    """A loss or activation became NaN/Inf during training."""
