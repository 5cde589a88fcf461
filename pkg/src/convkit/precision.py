"""Global floating point mode.

Training defaults to single precision; finite-difference gradient checks
only make sense in double, so gradcheck refuses to run otherwise. The mode
is read when buffers are allocated: existing maps and network states keep
the dtype they were created with.
"""

import numpy as np

from .errors import ConfigError

_MODES = {"single": np.float32, "double": np.float64}

_current = "single"


def set_precision(mode: str) -> None:
    """Select 'single' or 'double' for subsequently allocated buffers."""
    global _current
    if mode not in _MODES:
        raise ConfigError(f"unknown precision mode {mode!r}, expected 'single' or 'double'")
    _current = mode


def get_precision() -> str:
    return _current


def dtype() -> np.dtype:
    """Numpy dtype for the current mode."""
    return np.dtype(_MODES[_current])


class use_precision:
    """Context manager to run a block under a specific precision mode."""

    def __init__(self, mode: str):
        self.mode = mode
        self._saved = None

    def __enter__(self):
        self._saved = get_precision()
        set_precision(self.mode)
        return self

    def __exit__(self, *exc):
        set_precision(self._saved)
        return False
