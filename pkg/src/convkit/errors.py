"""Error taxonomy shared by every module.

Each class maps to one CLI exit code (see cli.EXIT_CODES), so raising the
right type is part of the public contract, not just style.
"""


class ConvkitError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ConvkitError):
    """Array or map shapes do not line up."""


class GeometryError(ConvkitError):
    """Layer geometry is impossible (kernel larger than map, size < 1, ...)."""


class ConfigError(ConvkitError):
    """Bad configuration value or malformed config/architecture file."""


class DataFormatError(ConvkitError):
    """Malformed dataset file: bad magic, truncation, count mismatch."""


class StateError(ConvkitError):
    """Operation invoked against stale or missing runtime state."""


class PrecisionError(ConvkitError):
    """Operation requires a floating point mode the caller did not set."""


class GeometryWarning(UserWarning):
    """Legal but lossy geometry: fractional kernel placement or pool truncation."""
