"""Finite-difference verification of the analytic gradient.

Central differences of the sample loss, parameter by parameter, against
the gradients produced by one backward pass. Only meaningful in double
precision: float32 rounding swamps the difference quotient, so single
mode is refused outright.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import precision
from .errors import PrecisionError
from .network import NetworkState
from .topology import NetworkSpec
from .training import targets_for

REL_EPS = 1e-12
DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-6


def sample_loss(net: NetworkState, channels, targets) -> float:
    out = net.forward(channels)
    return 0.5 * float(((out - targets) ** 2).sum())


def _param_arrays(net: NetworkState):
    return [(idx, name, arr) for idx, name, arr in net.parameters()]


def _locate(params, flat_index: int):
    for idx, name, arr in params:
        if flat_index < arr.size:
            return idx, name, arr, flat_index
        flat_index -= arr.size
    raise IndexError("parameter index out of range")


def finite_diff(net: NetworkState, channels, targets, param_index: int,
                h: float = DEFAULT_STEP) -> float:
    """Central difference of the sample loss along one parameter; the
    network is restored bit-exactly afterwards."""
    if net.dtype != np.float64:
        raise PrecisionError(
            "finite differences need a double-precision network")
    if h <= 0:
        raise PrecisionError(f"step must be > 0, got {h}")
    idx, name, arr, local = _locate(_param_arrays(net), param_index)
    flat = arr.reshape(-1)
    saved = flat[local].copy()
    flat[local] = saved + h
    loss_plus = sample_loss(net, channels, targets)
    flat[local] = saved - h
    loss_minus = sample_loss(net, channels, targets)
    flat[local] = saved
    return (loss_plus - loss_minus) / (2.0 * h)


def analytic_gradients(net: NetworkState, channels, targets) -> np.ndarray:
    """Flat gradient vector in parameters() order from one backward pass."""
    net.forward(channels)
    net.backward(targets)
    chunks = []
    for idx, layer in enumerate(net.layers):
        if hasattr(layer, "grad"):
            chunks.append(layer.grad.reshape(-1).copy())
        elif hasattr(layer, "grad_w"):
            chunks.append(layer.grad_w.reshape(-1).copy())
            chunks.append(layer.grad_b.reshape(-1).copy())
    return np.concatenate(chunks)


@dataclass
class GradEntry:
    layer: int
    name: str
    index: int
    analytic: float
    numeric: float
    rel_err: float


@dataclass
class GradReport:
    tolerance: float
    entries: list[GradEntry] = field(default_factory=list)
    max_rel_err: float = 0.0
    mean_rel_err: float = 0.0
    per_layer: dict[int, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.tolerance

    def worst(self) -> GradEntry:
        return max(self.entries, key=lambda e: e.rel_err)

    def render(self, kinds: dict[int, str] | None = None) -> str:
        lines = [f"parameters checked: {len(self.entries)}"]
        for layer in sorted(self.per_layer):
            kind = f" ({kinds[layer]})" if kinds and layer in kinds else ""
            lines.append(
                f"layer {layer}{kind}: max relative error "
                f"{self.per_layer[layer]:.3e}")
        w = self.worst()
        lines.append(f"worst: layer {w.layer} {w.name}[{w.index}] "
                     f"analytic {w.analytic:.6e} numeric {w.numeric:.6e} "
                     f"rel {w.rel_err:.3e}")
        lines.append(f"max relative error: {self.max_rel_err:.3e} "
                     f"(tolerance {self.tolerance:.1e})")
        lines.append("gradient check PASSED" if self.passed
                     else "gradient check FAILED")
        return "\n".join(lines)


def check_network(spec: NetworkSpec, seed: int,
                  tolerance: float = DEFAULT_TOLERANCE,
                  h: float = DEFAULT_STEP,
                  pitch_quantum: int | None = None) -> GradReport:
    """Sweep every weight and bias of a double-precision network built
    from the architecture description against central differences on one
    random sample."""
    if precision.get_precision() != "double":
        raise PrecisionError(
            "gradient checking requires double precision mode")
    kwargs = {"dtype": np.float64}
    if pitch_quantum is not None:
        kwargs["pitch_quantum"] = pitch_quantum
    net = NetworkState(spec, seed, **kwargs)
    rng = np.random.default_rng([seed, 0xFD])
    channels = rng.uniform(-1.0, 1.0, net.input_shape)
    label = int(rng.integers(net.n_classes))
    targets = targets_for(label, net.n_classes)

    analytic = analytic_gradients(net, channels, targets)
    report = GradReport(tolerance=tolerance)
    pos = 0
    for idx, name, arr in _param_arrays(net):
        for local in range(arr.size):
            numeric = finite_diff(net, channels, targets, pos, h)
            ga = float(analytic[pos])
            rel = abs(ga - numeric) / max(abs(ga) + abs(numeric), REL_EPS)
            report.entries.append(GradEntry(idx, name, local, ga, numeric, rel))
            report.per_layer[idx] = max(report.per_layer.get(idx, 0.0), rel)
            pos += 1
    rels = np.array([e.rel_err for e in report.entries])
    report.max_rel_err = float(rels.max())
    report.mean_rel_err = float(rels.mean())
    return report
