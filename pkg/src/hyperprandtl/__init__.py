"""Numerical laboratory for the hyperbolic Prandtl system in anisotropic Gevrey spaces."""

from .errors import (
    BlowupError,
    ConfigError,
    DomainError,
    FieldFormatError,
    HyperPrandtlError,
    IncompatibleDataError,
)

__version__ = "0.1.0"

__all__ = [
    "BlowupError",
    "ConfigError",
    "DomainError",
    "FieldFormatError",
    "HyperPrandtlError",
    "IncompatibleDataError",
    "__version__",
]
