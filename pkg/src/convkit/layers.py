"""Forward semantics of the learnable layer kinds.

Everything here works on logical map views, so pitch never leaks into
results. The stack variants are what the network engine uses; single-map
entry points exist for direct experimentation and tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError, GeometryError, StateError
from .tensor import FeatureMap, MapStack, new_stack
from .topology import ConnectionTable, output_map_size

ACT_SCALE = kernels.ACT_SCALE
ACT_GAIN = kernels.ACT_GAIN


def activation(a):
    """Scaled hyperbolic tangent, saturating at +-1.7159."""
    return ACT_SCALE * np.tanh(ACT_GAIN * a)


def activation_deriv(a):
    t = np.tanh(ACT_GAIN * a)
    return ACT_SCALE * ACT_GAIN * (1.0 - t * t)


class KernelBank:
    """Weights of one convolutional transition: a flat arena addressed
    through the connection table, one Kx*Ky block per connected pair and
    one bias slot per destination map."""

    def __init__(self, table: ConnectionTable, arena: np.ndarray | None = None,
                 dtype=None):
        if arena is None:
            arena = np.zeros(table.arena_size, dtype=dtype or np.float64)
        if arena.shape != (table.arena_size,):
            raise DimensionError(
                f"arena must have {table.arena_size} slots, got {arena.shape}")
        self.table = table
        self.arena = arena

    @property
    def kx(self) -> int:
        return self.table.kx

    @property
    def ky(self) -> int:
        return self.table.ky

    def weight(self, dest: int, src: int) -> np.ndarray:
        """(ky, kx) view of the kernel joining src to dest."""
        off = self.table.weight_index[dest, src]
        if off < 0:
            raise StateError(f"maps {dest} and {src} are not connected")
        block = self.kx * self.ky
        return self.arena[off: off + block].reshape(self.ky, self.kx)

    def bias(self, dest: int) -> float:
        return float(self.arena[self.table.bias_offset[dest]])

    def set_bias(self, dest: int, value: float) -> None:
        self.arena[self.table.bias_offset[dest]] = value


def conv_forward(inputs: MapStack, bank: KernelBank, skip: tuple[int, int],
                 dest: int | None = None):
    """Convolve all connected source maps into destination pre-activations
    and activations. With dest=None returns (a, y) MapStacks; with a map
    index returns that map's (a, y) FeatureMaps."""
    table = bank.table
    sx, sy = skip
    if inputs.n_maps != table.n_src:
        raise DimensionError(
            f"expected {table.n_src} source maps, got {inputs.n_maps}")
    out_w = output_map_size(inputs.width, bank.kx, sx)
    out_h = output_map_size(inputs.height, bank.ky, sy)
    a = new_stack(table.n_dest, out_w, out_h, dtype=inputs.dtype)
    y = new_stack(table.n_dest, out_w, out_h, dtype=inputs.dtype)
    kernels.conv_fwd(inputs.data, inputs.width, bank.arena,
                     table._fwd_offsets, table._fwd_srcs, table._fwd_widx,
                     table.bias_offset, bank.kx, bank.ky, sx, sy,
                     a.data, y.data, out_w, out_h)
    if dest is None:
        return a, y
    return a[dest], y[dest]


@dataclass
class PoolIndex:
    """Winning input coordinate per pooled output cell."""

    rows: np.ndarray      # source row of each winner
    cols: np.ndarray      # source column of each winner
    region: tuple[int, int]
    src_width: int
    src_height: int

    def winner(self, x: int, y: int, map_index: int | None = None):
        """(x, y) source coordinate of the winner for output cell (x, y)."""
        if self.rows.ndim == 3:
            return int(self.cols[map_index, y, x]), int(self.rows[map_index, y, x])
        return int(self.cols[y, x]), int(self.rows[y, x])


def maxpool_forward_stack(inputs: MapStack, region: tuple[int, int]):
    px, py = region
    if px < 1 or py < 1:
        raise GeometryError(f"pool region must be >= 1, got {px}x{py}")
    if px > inputs.width or py > inputs.height:
        raise GeometryError(
            f"pool {px}x{py} larger than map {inputs.width}x{inputs.height}")
    out_w = inputs.width // px
    out_h = inputs.height // py
    out = new_stack(inputs.n_maps, out_w, out_h, dtype=inputs.dtype)
    arg_r = np.zeros((inputs.n_maps, out_h, out_w), dtype=np.int64)
    arg_c = np.zeros_like(arg_r)
    kernels.maxpool_fwd(inputs.data, px, py, out.data, out_w, out_h, arg_r, arg_c)
    index = PoolIndex(arg_r, arg_c, (px, py), inputs.width, inputs.height)
    return out, index


def maxpool_forward(input_map: FeatureMap, region: tuple[int, int]):
    """Maximum over non-overlapping region tiles; trailing cells that do
    not fill a tile are dropped. Also records each tile's argmax."""
    stack = MapStack(input_map.data[np.newaxis], input_map.width)
    out, index = maxpool_forward_stack(stack, region)
    return out[0], PoolIndex(index.rows[0], index.cols[0], index.region,
                             index.src_width, index.src_height)


def fc_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray):
    """Dense affine map plus activation; returns (pre_activation, output)."""
    x = np.asarray(x)
    if x.ndim != 1 or weights.ndim != 2 or weights.shape[0] != x.shape[0] \
            or bias.shape != (weights.shape[1],):
        raise DimensionError(
            f"shapes do not line up: x{x.shape} W{weights.shape} b{bias.shape}")
    a = x @ weights + bias
    return a, activation(a)
