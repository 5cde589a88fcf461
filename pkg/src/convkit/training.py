"""Online gradient-descent training loop and the experiment harness.

Protocol: every image triggers a weight update; the training set doubles
as the validation set (evaluated without deformation); the reported model
is the one at the epoch with the lowest validation error (its test error
is the headline TfbV number, the best test error over all epochs is bT).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .augment import DeformationConfig, deform_channels, sample_params
from .errors import ConfigError, DimensionError
from .network import NetworkState
from .topology import NetworkSpec


@dataclass
class TrainConfig:
    epochs: int = 5
    eta0: float = 1e-3
    eta_decay: float = 1.0          # multiplicative, applied per epoch
    eta_floor: float = 0.0
    seed: int = 0
    deformation: DeformationConfig = field(default_factory=DeformationConfig)
    shuffle: bool = True
    test_every: int = 1             # test-set evaluation cadence, in epochs

    def __post_init__(self):
        if not 0 < self.eta_decay <= 1:
            raise ConfigError(f"eta_decay must be in (0, 1], got {self.eta_decay}")
        if self.eta_floor > self.eta0:
            raise ConfigError("eta_floor cannot exceed eta0")
        if self.test_every < 1:
            raise ConfigError("test_every must be >= 1")


@dataclass
class EpochStats:
    epoch: int
    lr: float
    train_err: float       # also the validation number (same data, no deformation)
    test_err: float        # nan on epochs where the test set was not evaluated
    seconds: float


@dataclass
class RunRecord:
    epochs: list[EpochStats] = field(default_factory=list)
    tfbv: float = float("nan")     # test error at the best-validation epoch
    bt: float = float("nan")       # best test error over all epochs
    best_epoch: int = -1

    def finalize(self) -> None:
        best_val = float("inf")
        self.bt = float("inf")
        for st in self.epochs:
            if np.isnan(st.test_err):
                continue
            if st.train_err < best_val:
                best_val = st.train_err
                self.tfbv = st.test_err
                self.best_epoch = st.epoch
            self.bt = min(self.bt, st.test_err)
        if not np.isfinite(self.bt):
            self.bt = self.tfbv = float("nan")
            self.best_epoch = -1

    @property
    def seconds_per_epoch(self) -> float:
        if not self.epochs:
            return float("nan")
        return sum(st.seconds for st in self.epochs) / len(self.epochs)


@dataclass
class ExperimentSummary:
    runs: list[RunRecord]
    seeds: list[int]
    tfbv_mean: float
    tfbv_std: float | None         # None for a single run
    seconds_per_epoch: float


def lr_at_epoch(config: TrainConfig, epoch: int) -> float:
    """Geometric decay clipped at the floor; epoch 0 is the initial rate."""
    if epoch < 0:
        raise ConfigError(f"epoch must be >= 0, got {epoch}")
    return max(config.eta0 * config.eta_decay ** epoch, config.eta_floor)


def mnist_decay(eta0: float = 1e-3, eta_floor: float = 3e-5,
                epochs: int = 500) -> float:
    """Decay constant that walks eta0 down to the floor in the given epochs."""
    return (eta_floor / eta0) ** (1.0 / epochs)


def targets_for(label: int, n_classes: int, dtype=np.float64) -> np.ndarray:
    """+1 for the true class, -1 elsewhere."""
    t = np.full(n_classes, -1.0, dtype=dtype)
    t[label] = 1.0
    return t


def init_weights(spec: NetworkSpec, seed: int, **kwargs) -> NetworkState:
    """Fresh network with every weight and bias uniform on [-0.05, 0.05]."""
    return NetworkState(spec, seed, **kwargs)


def _check_geometry(net: NetworkState, data) -> None:
    expected = net.input_shape
    got = (data.channels, data.height, data.width)
    if expected != got:
        raise DimensionError(
            f"network expects input {expected}, dataset provides {got}")
    top = int(data.labels.max())
    if top >= net.n_classes:
        raise DimensionError(
            f"dataset label {top} exceeds the network's {net.n_classes} outputs")


def train_epoch(net: NetworkState, data, config: TrainConfig, epoch: int) -> float:
    """One full pass in seeded shuffle order, updating after every image.
    Returns the mean pre-update sample loss."""
    _check_geometry(net, data)
    eta = lr_at_epoch(config, epoch)
    n = len(data)
    if config.shuffle:
        order = np.random.default_rng([config.seed, epoch, 0x5FFE]).permutation(n)
    else:
        order = np.arange(n)
    deform = config.deformation.enabled()
    targets = np.eye(net.n_classes, dtype=np.float64) * 2.0 - 1.0
    total = 0.0
    for i in order:
        channels = data.images[i]
        if deform:
            params = sample_params(config.deformation,
                                   [config.seed, epoch, int(i)])
            channels = deform_channels(channels, params)
        total += net.train_step(channels, targets[data.labels[i]], eta)
    return total / n


def evaluate(net: NetworkState, data) -> float:
    """Classification error in percent; never deforms."""
    _check_geometry(net, data)
    wrong = 0
    for i in range(len(data)):
        if net.predict(data.images[i]) != data.labels[i]:
            wrong += 1
    return 100.0 * wrong / len(data)


def run_training(net: NetworkState, train_data, test_data,
                 config: TrainConfig, on_epoch=None) -> RunRecord:
    """Full training run with per-epoch validation (on the training set)
    and test evaluation every config.test_every epochs."""
    record = RunRecord()
    for epoch in range(config.epochs):
        started = time.perf_counter()
        train_epoch(net, train_data, config, epoch)
        train_err = evaluate(net, train_data)
        if epoch % config.test_every == 0 or epoch == config.epochs - 1:
            test_err = evaluate(net, test_data)
        else:
            test_err = float("nan")
        stats = EpochStats(epoch, lr_at_epoch(config, epoch), train_err,
                           test_err, time.perf_counter() - started)
        record.epochs.append(stats)
        if on_epoch is not None:
            on_epoch(stats)
    record.finalize()
    return record


def run_experiment(spec: NetworkSpec, train_data, test_data,
                   config: TrainConfig, runs: int,
                   on_epoch=None, **net_kwargs) -> ExperimentSummary:
    """N runs differing only in the weight-init seed; everything else,
    including per-epoch shuffle order and deformations, is shared."""
    if runs < 1:
        raise ConfigError(f"need at least one run, got {runs}")
    records = []
    seeds = []
    for r in range(runs):
        seed = config.seed + r
        net = NetworkState(spec, seed, **net_kwargs)
        records.append(run_training(net, train_data, test_data, config,
                                    on_epoch=on_epoch))
        seeds.append(seed)
    tfbvs = np.array([rec.tfbv for rec in records], dtype=np.float64)
    std = float(np.std(tfbvs, ddof=1)) if runs >= 2 else None
    secs = float(np.mean([rec.seconds_per_epoch for rec in records]))
    return ExperimentSummary(records, seeds, float(np.mean(tfbvs)), std, secs)
