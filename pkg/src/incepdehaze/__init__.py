"""Haze synthesis, inception-GAN dehazing and image/detection metrics."""

from .estimators import HazeSynthesizer, IncepDehazeGAN
from .exceptions import (
    ConfigError,
    ContractError,
    ImageFormatError,
    IncepDehazeError,
    NonFiniteError,
    ParameterError,
    ShapeError,
    UndefinedResultError,
    ValidationError,
)

from ._version import __version__

__all__ = [
    "ConfigError",
    "ContractError",
    "HazeSynthesizer",
    "ImageFormatError",
    "IncepDehazeError",
    "IncepDehazeGAN",
    "NonFiniteError",
    "ParameterError",
    "ShapeError",
    "UndefinedResultError",
    "ValidationError",
    "__version__",
]
