"""Runtime network state: weights, per-layer activations and deltas.

Buffers are allocated once at construction and overwritten per sample, so
an online training pass allocates nothing in the hot loop. The backward
walk stores pre-activation deltas on convolutional and fully connected
layers and plain output gradients on pooling layers; propagation stops at
the image-processing/input boundary, below which nothing is learnable.
"""

from __future__ import annotations

import numpy as np

from . import kernels, precision
from .backprop import output_deltas, sample_loss
from .errors import ConfigError, DimensionError
from .filters import apply_image_processing, bank_for_selection
from .layers import KernelBank, activation, activation_deriv
from .tensor import DEFAULT_PITCH_QUANTUM, new_stack
from .topology import NetworkSpec, build_full_table, build_random_table

DEFAULT_TABLE_SEED = 0x7AB1E


class _Input:
    kind = "input"

    def __init__(self, maps, w, h, quantum, dtype):
        self.y = new_stack(maps, w, h, quantum, dtype)
        self.delta = None


class _ImgProc:
    kind = "image_processing"

    def __init__(self, selection, out_maps, w, h, quantum, dtype):
        self.selection = tuple(selection)
        self.bank = bank_for_selection(selection)
        self.y = new_stack(out_maps, w, h, quantum, dtype)
        self.delta = None


class _Conv:
    kind = "convolutional"

    def __init__(self, table, skip, out_w, out_h, quantum, dtype):
        self.table = table
        self.bank = KernelBank(table, dtype=dtype)
        self.skip = skip
        self.a = new_stack(table.n_dest, out_w, out_h, quantum, dtype)
        self.y = new_stack(table.n_dest, out_w, out_h, quantum, dtype)
        self.delta = new_stack(table.n_dest, out_w, out_h, quantum, dtype)
        self.grad = np.zeros_like(self.bank.arena)


class _Pool:
    kind = "max_pooling"

    def __init__(self, region, maps, out_w, out_h, quantum, dtype):
        self.region = region
        self.y = new_stack(maps, out_w, out_h, quantum, dtype)
        self.delta = new_stack(maps, out_w, out_h, quantum, dtype)
        self.arg_r = np.zeros((maps, out_h, out_w), dtype=np.int64)
        self.arg_c = np.zeros_like(self.arg_r)


class _FC:
    kind = "fully_connected"

    def __init__(self, n_in, n_out, dtype):
        self.weights = np.zeros((n_in, n_out), dtype=dtype)
        self.bias = np.zeros(n_out, dtype=dtype)
        self.a = np.zeros(n_out, dtype=dtype)
        self.y = np.zeros(n_out, dtype=dtype)
        self.delta = np.zeros(n_out, dtype=dtype)
        self.x = np.zeros(n_in, dtype=dtype)
        self.grad_w = np.zeros_like(self.weights)
        self.grad_b = np.zeros_like(self.bias)


class NetworkState:
    """All weights plus scratch state for one network instance."""

    def __init__(self, spec: NetworkSpec, seed: int,
                 dtype=None, pitch_quantum: int = DEFAULT_PITCH_QUANTUM,
                 table_seed: int = DEFAULT_TABLE_SEED):
        self.spec = spec
        self.seed = seed
        self.table_seed = table_seed
        self.dtype = np.dtype(dtype) if dtype is not None else precision.dtype()
        self.pitch_quantum = pitch_quantum
        self.layers: list = []

        for idx, ls in enumerate(spec.layers):
            prev = spec.layers[idx - 1] if idx else None
            if ls.kind == "input":
                layer = _Input(ls.out_maps, ls.out_width, ls.out_height,
                               pitch_quantum, self.dtype)
            elif ls.kind == "image_processing":
                layer = _ImgProc(ls.filters, ls.out_maps, ls.out_width,
                                 ls.out_height, pitch_quantum, self.dtype)
            elif ls.kind == "convolutional":
                if ls.connectivity == "random":
                    # Table seed is fixed per layer, independent of the
                    # weight-init seed: repeated runs share the architecture.
                    table = build_random_table(prev.out_maps, ls.maps,
                                               ls.in_degree, [table_seed, idx],
                                               ls.kernel)
                else:
                    table = build_full_table(prev.out_maps, ls.maps, ls.kernel)
                layer = _Conv(table, ls.skip, ls.out_width, ls.out_height,
                              pitch_quantum, self.dtype)
            elif ls.kind == "max_pooling":
                layer = _Pool(ls.pool, prev.out_maps, ls.out_width,
                              ls.out_height, pitch_quantum, self.dtype)
            elif ls.kind in ("fully_connected", "output"):
                if prev.is_spatial:
                    n_in = prev.out_maps * prev.out_width * prev.out_height
                else:
                    n_in = prev.neurons
                layer = _FC(n_in, ls.neurons, self.dtype)
            else:
                raise ConfigError(f"cannot build layer kind {ls.kind!r}")
            self.layers.append(layer)

        self._init_weights(seed)

    def _init_weights(self, seed) -> None:
        rng = np.random.default_rng(seed)
        for layer in self.layers:
            if isinstance(layer, _Conv):
                layer.bank.arena[:] = rng.uniform(-0.05, 0.05,
                                                  layer.bank.arena.shape)
            elif isinstance(layer, _FC):
                layer.weights[:] = rng.uniform(-0.05, 0.05, layer.weights.shape)
                layer.bias[:] = rng.uniform(-0.05, 0.05, layer.bias.shape)

    # -- geometry ------------------------------------------------------

    @property
    def n_classes(self) -> int:
        return self.spec.n_classes

    @property
    def input_shape(self) -> tuple[int, int, int]:
        first = self.spec.input_layer
        return first.out_maps, first.out_height, first.out_width

    def parameters(self):
        """Yield (layer_index, name, array) for every learnable array."""
        for idx, layer in enumerate(self.layers):
            if isinstance(layer, _Conv):
                yield idx, "arena", layer.bank.arena
            elif isinstance(layer, _FC):
                yield idx, "weights", layer.weights
                yield idx, "bias", layer.bias

    def count_parameters(self) -> int:
        return sum(arr.size for _, _, arr in self.parameters())

    # -- forward -------------------------------------------------------

    def forward(self, channels: np.ndarray) -> np.ndarray:
        """Run one sample through the stack; returns the output activations
        (a live view, copy before mutating)."""
        channels = np.asarray(channels)
        if channels.shape != self.input_shape:
            raise DimensionError(
                f"sample shape {channels.shape} does not match input "
                f"{self.input_shape}")
        first = self.layers[0]
        first.y.view[:] = channels
        prev = first
        for layer in self.layers[1:]:
            if isinstance(layer, _ImgProc):
                produced = apply_image_processing(
                    prev.y, layer.bank, layer.selection,
                    pitch_quantum=self.pitch_quantum)
                layer.y.view[:] = produced.view
            elif isinstance(layer, _Conv):
                t = layer.table
                kernels.conv_fwd(prev.y.data, prev.y.width, layer.bank.arena,
                                 t._fwd_offsets, t._fwd_srcs, t._fwd_widx,
                                 t.bias_offset,
                                 t.kx, t.ky, layer.skip[0], layer.skip[1],
                                 layer.a.data, layer.y.data,
                                 layer.y.width, layer.y.height)
            elif isinstance(layer, _Pool):
                kernels.maxpool_fwd(prev.y.data, layer.region[0],
                                    layer.region[1], layer.y.data,
                                    layer.y.width, layer.y.height,
                                    layer.arg_r, layer.arg_c)
            elif isinstance(layer, _FC):
                if isinstance(prev, _FC):
                    layer.x[:] = prev.y
                else:
                    layer.x[:] = prev.y.view.ravel()
                layer.a[:] = layer.x @ layer.weights + layer.bias
                layer.y[:] = activation(layer.a)
            prev = layer
        return self.layers[-1].y

    # -- backward ------------------------------------------------------

    def backward(self, targets: np.ndarray) -> None:
        """Fill every layer's gradient buffers for the squared-error loss
        against +-1 targets. Must follow a forward pass on the same sample."""
        layers = self.layers
        k = len(layers) - 1
        out = layers[k]
        out.delta[:] = output_deltas(out.y, targets, out.a)

        # fully connected section
        while isinstance(layers[k], _FC):
            fc = layers[k]
            np.outer(fc.x, fc.delta, out=fc.grad_w)
            fc.grad_b[:] = fc.delta
            xgrad = fc.weights @ fc.delta
            k -= 1
            below = layers[k]
            if isinstance(below, _FC):
                below.delta[:] = xgrad * activation_deriv(below.a)
            elif below.delta is not None:
                below.delta.view[:] = xgrad.reshape(below.delta.n_maps,
                                                    below.delta.height,
                                                    below.delta.width)
                if isinstance(below, _Conv):
                    below.delta.view[:] *= activation_deriv(below.a.view)
            else:
                return    # flattened straight off the input: nothing to learn below

        # spatial section
        while k >= 1:
            layer = layers[k]
            prev = layers[k - 1]
            if isinstance(layer, _Conv):
                t = layer.table
                kernels.weight_grad(layer.delta.data, layer.delta.width,
                                    layer.delta.height, prev.y.data,
                                    t._pair_dest, t._pair_src, t.pair_offsets,
                                    t.kx, t.ky, layer.skip[0], layer.skip[1],
                                    layer.grad)
                kernels.bias_grad(layer.delta.data, layer.delta.width,
                                  layer.delta.height, t.bias_offset, layer.grad)
                if prev.delta is None:
                    return
                kernels.pull_bwd(layer.delta.data, layer.delta.width,
                                 layer.delta.height, layer.bank.arena,
                                 t._bwd_offsets, t._bwd_dests, t._bwd_widx,
                                 t.kx, t.ky, layer.skip[0], layer.skip[1],
                                 prev.delta.data, prev.delta.width,
                                 prev.delta.height)
            else:    # max pooling: route to the recorded argmax cells
                if prev.delta is None:
                    return
                prev.delta.data[:] = 0
                kernels.maxpool_bwd(layer.delta.data, layer.delta.width,
                                    layer.delta.height, layer.arg_r,
                                    layer.arg_c, prev.delta.data)
            if isinstance(prev, _Conv):
                prev.delta.view[:] *= activation_deriv(prev.a.view)
            k -= 1

    def apply_gradients(self, eta: float) -> None:
        """One online SGD step from the gradients of the last backward()."""
        if eta <= 0:
            raise ConfigError(f"learning rate must be > 0, got {eta}")
        for layer in self.layers:
            if isinstance(layer, _Conv):
                layer.bank.arena -= eta * layer.grad
            elif isinstance(layer, _FC):
                layer.weights -= eta * layer.grad_w
                layer.bias -= eta * layer.grad_b

    def train_step(self, channels, targets, eta: float) -> float:
        """forward + backward + update; returns the pre-update sample loss."""
        out = self.forward(channels)
        loss = sample_loss(out, targets)
        self.backward(targets)
        if eta > 0:
            self.apply_gradients(eta)
        return loss

    def predict(self, channels) -> int:
        """Class with the highest output activation (ties: lowest index)."""
        return int(np.argmax(self.forward(channels)))

    # -- persistence ---------------------------------------------------

    def save_weights(self, path) -> None:
        arrays = {f"L{idx}_{name}": arr for idx, name, arr in self.parameters()}
        np.savez(path, **arrays)

    def load_weights(self, path) -> None:
        with np.load(path) as data:
            for idx, name, arr in self.parameters():
                key = f"L{idx}_{name}"
                if key not in data:
                    raise ConfigError(f"weight file is missing {key}")
                stored = data[key]
                if stored.shape != arr.shape:
                    raise ConfigError(
                        f"{key} has shape {stored.shape}, expected {arr.shape}")
                arr[:] = stored
