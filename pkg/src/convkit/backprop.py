"""Backward pass building blocks.

Deltas flow backwards by pulling: every source neuron gathers from the
rectangle of destination neurons whose kernels cover it, bounded by
pull_range. push_deltas_conv is the scatter formulation of the same sum;
it exists purely as a slow reference oracle and must stay independent of
the pulling code path.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .errors import ConfigError, DimensionError, StateError
from .layers import KernelBank, PoolIndex, activation_deriv
from .tensor import FeatureMap, MapStack, new_stack


def output_deltas(outputs, targets, pre_activations) -> np.ndarray:
    """Pre-activation gradients of the squared-error loss with +-1 targets:
    delta_k = (y_k - t_k) * act'(a_k)."""
    outputs = np.asarray(outputs)
    targets = np.asarray(targets)
    pre_activations = np.asarray(pre_activations)
    if not outputs.shape == targets.shape == pre_activations.shape:
        raise DimensionError(
            f"length mismatch: y{outputs.shape} t{targets.shape} "
            f"a{pre_activations.shape}")
    return (outputs - targets) * activation_deriv(pre_activations)


def sample_loss(outputs, targets) -> float:
    """Half sum of squared residuals, the quantity the deltas differentiate."""
    outputs = np.asarray(outputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    return 0.5 * float(((outputs - targets) ** 2).sum())


def pull_range(i: int, kernel: int, skip: int, dest_size: int) -> tuple[int, int]:
    """Inclusive range of destination coordinates whose kernels cover source
    cell i along one axis; empty ranges come back with lo > hi."""
    stride = skip + 1
    lo = max(math.ceil((i - kernel + 1) / stride), 0)
    hi = min(i // stride, dest_size - 1)
    return lo, hi


def _src_geometry(pre_activations, src_size):
    if pre_activations is not None:
        return pre_activations.width, pre_activations.height
    if src_size is None:
        raise StateError("need pre-activations (or an explicit source size) "
                         "to shape the pulled deltas")
    return src_size


def pull_deltas_conv(delta_next: MapStack, bank: KernelBank,
                     skip: tuple[int, int],
                     pre_activations: MapStack | None = None,
                     src_size: tuple[int, int] | None = None) -> MapStack:
    """Gather destination deltas into source-layer deltas.

    With pre_activations the result is multiplied by the activation
    derivative (source layer is a convolutional one); without, the raw
    gathered sum is returned (source layer has no activation of its own).
    """
    table = bank.table
    sx, sy = skip
    if delta_next.n_maps != table.n_dest:
        raise DimensionError(
            f"expected {table.n_dest} destination maps, got {delta_next.n_maps}")
    src_w, src_h = _src_geometry(pre_activations, src_size)
    out = new_stack(table.n_src, src_w, src_h, dtype=delta_next.dtype)
    kernels.pull_bwd(delta_next.data, delta_next.width, delta_next.height,
                     bank.arena, table._bwd_offsets, table._bwd_dests,
                     table._bwd_widx, bank.kx, bank.ky, sx, sy,
                     out.data, src_w, src_h)
    if pre_activations is not None:
        out.view[:] *= activation_deriv(pre_activations.view)
    return out


def push_deltas_conv(delta_next: MapStack, bank: KernelBank,
                     skip: tuple[int, int],
                     pre_activations: MapStack | None = None,
                     src_size: tuple[int, int] | None = None) -> MapStack:
    """Scatter oracle: each destination delta is written out to the
    Kx x Ky source cells its kernel covers. Sequential, unoptimized."""
    table = bank.table
    sx, sy = skip
    if delta_next.n_maps != table.n_dest:
        raise DimensionError(
            f"expected {table.n_dest} destination maps, got {delta_next.n_maps}")
    src_w, src_h = _src_geometry(pre_activations, src_size)
    tx, ty = sx + 1, sy + 1
    acc = np.zeros((table.n_src, src_h, src_w), dtype=np.float64)
    dn = delta_next.view
    for d in range(table.n_dest):
        for s in table.forward[d]:
            w = bank.weight(d, s)
            for y in range(delta_next.height):
                for x in range(delta_next.width):
                    acc[s, y * ty: y * ty + bank.ky,
                        x * tx: x * tx + bank.kx] += dn[d, y, x] * w
    out = new_stack(table.n_src, src_w, src_h, dtype=delta_next.dtype)
    out.view[:] = acc
    if pre_activations is not None:
        out.view[:] *= activation_deriv(pre_activations.view)
    return out


def pool_backward(delta_next, index: PoolIndex, pre_activations):
    """Route every pooled delta to its recorded argmax cell (pooling is
    pass-through, so the derivative factor is 1)."""
    single = isinstance(delta_next, FeatureMap)
    if single:
        delta_next = MapStack(delta_next.data[np.newaxis], delta_next.width)
        pre_activations = MapStack(pre_activations.data[np.newaxis],
                                   pre_activations.width)
        rows, cols = index.rows[np.newaxis], index.cols[np.newaxis]
    else:
        rows, cols = index.rows, index.cols
    expected = (delta_next.n_maps, delta_next.height, delta_next.width)
    if rows.shape != expected or cols.shape != expected:
        raise StateError(
            f"pool index shape {rows.shape} does not match deltas {expected}")
    if (pre_activations.width, pre_activations.height) != (index.src_width,
                                                           index.src_height):
        raise StateError(
            f"pool index was built for {index.src_width}x{index.src_height}, "
            f"got {pre_activations.width}x{pre_activations.height}")
    out = new_stack(delta_next.n_maps, pre_activations.width,
                    pre_activations.height, dtype=delta_next.dtype)
    kernels.maxpool_bwd(delta_next.data, delta_next.width, delta_next.height,
                        rows, cols, out.data)
    return out[0] if single else out


def conv_weight_gradients(delta_next: MapStack, inputs_y: MapStack,
                          bank: KernelBank, skip: tuple[int, int]) -> np.ndarray:
    """Arena-shaped gradient of the sample loss w.r.t. every kernel weight
    and bias of one convolutional transition."""
    table = bank.table
    sx, sy = skip
    grads = np.zeros_like(bank.arena)
    kernels.weight_grad(delta_next.data, delta_next.width, delta_next.height,
                        inputs_y.data, table._pair_dest, table._pair_src,
                        table.pair_offsets, bank.kx, bank.ky, sx, sy, grads)
    kernels.bias_grad(delta_next.data, delta_next.width, delta_next.height,
                      table.bias_offset, grads)
    return grads


def adjust_weights(gradients: np.ndarray, bank: KernelBank, eta: float) -> KernelBank:
    """One online gradient-descent step over every connected pair and bias."""
    if eta <= 0:
        raise ConfigError(f"learning rate must be > 0, got {eta}")
    if gradients.shape != bank.arena.shape:
        raise DimensionError("gradient arena shape does not match the weights")
    bank.arena -= eta * gradients
    return bank
