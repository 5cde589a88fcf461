"""Strided 2D map storage.

A map of logical size width x height is stored in a (height, pitch) array
with pitch rounded up to a multiple of the pitch quantum, so logical cell
(x, y) lives at flat index y * pitch + x. Padding columns (x >= width) are
scratch: no operation reads them into a result, and every consumer works on
the logical view, which keeps results identical across pitch choices.
"""

from __future__ import annotations

import numpy as np

from . import precision
from .errors import DimensionError

DEFAULT_PITCH_QUANTUM = 32


def _round_up(width: int, quantum: int) -> int:
    return ((width + quantum - 1) // quantum) * quantum


class FeatureMap:
    """One 2D grid of activations (or deltas) with padded rows."""

    __slots__ = ("data", "width", "height")

    def __init__(self, data: np.ndarray, width: int):
        if data.ndim != 2 or not 1 <= width <= data.shape[1]:
            raise DimensionError("backing array must be 2D with pitch >= width")
        self.data = data
        self.width = int(width)
        self.height = int(data.shape[0])

    @property
    def pitch(self) -> int:
        return self.data.shape[1]

    @property
    def view(self) -> np.ndarray:
        """Logical (height, width) window; padding columns excluded."""
        return self.data[:, : self.width]

    @property
    def dtype(self):
        return self.data.dtype

    def __getitem__(self, xy):
        x, y = xy
        self._check(x, y)
        return self.data[y, x]

    def __setitem__(self, xy, value):
        x, y = xy
        self._check(x, y)
        self.data[y, x] = value

    def _check(self, x, y):
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise DimensionError(
                f"cell ({x}, {y}) outside {self.width}x{self.height} map")

    def flat_index(self, x: int, y: int) -> int:
        """Index of logical cell (x, y) in the flattened backing store."""
        self._check(x, y)
        return y * self.pitch + x

    def copy(self) -> "FeatureMap":
        return FeatureMap(self.data.copy(), self.width)

    def __repr__(self):
        return f"FeatureMap({self.width}x{self.height}, pitch={self.pitch}, {self.dtype})"


def new_map(width: int, height: int,
            pitch_quantum: int = DEFAULT_PITCH_QUANTUM,
            dtype=None) -> FeatureMap:
    """Allocate a zeroed map; pitch is the smallest quantum multiple >= width."""
    if width < 1 or height < 1 or pitch_quantum < 1:
        raise DimensionError(
            f"map dimensions and pitch quantum must be >= 1, "
            f"got {width}x{height} quantum {pitch_quantum}")
    if dtype is None:
        dtype = precision.dtype()
    pitch = _round_up(width, pitch_quantum)
    return FeatureMap(np.zeros((height, pitch), dtype=dtype), width)


def from_array(values: np.ndarray,
               pitch_quantum: int = DEFAULT_PITCH_QUANTUM,
               dtype=None) -> FeatureMap:
    """Copy a dense (height, width) array into a freshly pitched map."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise DimensionError("expected a 2D array")
    m = new_map(values.shape[1], values.shape[0], pitch_quantum, dtype)
    m.view[:] = values
    return m


def map_equal(a: FeatureMap, b: FeatureMap, tol: float) -> bool:
    """True iff all logical cells agree within tol; padding is ignored."""
    if a.width != b.width or a.height != b.height:
        raise DimensionError(
            f"shape mismatch: {a.width}x{a.height} vs {b.width}x{b.height}")
    return bool(np.all(np.abs(a.view - b.view) <= tol))


class MapStack:
    """All maps of one layer in a single (maps, height, pitch) buffer."""

    __slots__ = ("data", "width", "height")

    def __init__(self, data: np.ndarray, width: int):
        if data.ndim != 3 or not 1 <= width <= data.shape[2]:
            raise DimensionError("backing array must be 3D with pitch >= width")
        self.data = data
        self.width = int(width)
        self.height = int(data.shape[1])

    @property
    def n_maps(self) -> int:
        return self.data.shape[0]

    @property
    def pitch(self) -> int:
        return self.data.shape[2]

    @property
    def view(self) -> np.ndarray:
        return self.data[:, :, : self.width]

    @property
    def dtype(self):
        return self.data.dtype

    def __len__(self):
        return self.n_maps

    def __getitem__(self, i: int) -> FeatureMap:
        """Map i, sharing storage with the stack."""
        return FeatureMap(self.data[i], self.width)

    def copy(self) -> "MapStack":
        return MapStack(self.data.copy(), self.width)

    def __repr__(self):
        return (f"MapStack({self.n_maps} maps {self.width}x{self.height}, "
                f"pitch={self.pitch}, {self.dtype})")


def new_stack(n_maps: int, width: int, height: int,
              pitch_quantum: int = DEFAULT_PITCH_QUANTUM,
              dtype=None) -> MapStack:
    if n_maps < 1:
        raise DimensionError("a stack needs at least one map")
    if width < 1 or height < 1 or pitch_quantum < 1:
        raise DimensionError(
            f"map dimensions and pitch quantum must be >= 1, "
            f"got {width}x{height} quantum {pitch_quantum}")
    if dtype is None:
        dtype = precision.dtype()
    pitch = _round_up(width, pitch_quantum)
    return MapStack(np.zeros((n_maps, height, pitch), dtype=dtype), width)


def stack_from_array(values: np.ndarray,
                     pitch_quantum: int = DEFAULT_PITCH_QUANTUM,
                     dtype=None) -> MapStack:
    """Copy a dense (maps, height, width) array into a pitched stack."""
    values = np.asarray(values)
    if values.ndim != 3:
        raise DimensionError("expected a 3D array")
    s = new_stack(values.shape[0], values.shape[2], values.shape[1],
                  pitch_quantum, dtype)
    s.view[:] = values
    return s
