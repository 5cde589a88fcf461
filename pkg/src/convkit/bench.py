"""Throughput benchmark: single- versus multi-worker samples per second.

Workers parallelize over maps (forward, delta pulling) and kernel blocks
(weight gradients); results are bit-identical at any worker count, so this
reports speed only, never correctness.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field


from . import kernels
from .errors import ConfigError
from .network import NetworkState
from .topology import NetworkSpec
from .training import targets_for


@dataclass
class BenchReport:
    workers: int
    forward_sps: dict[int, float] = field(default_factory=dict)
    training_sps: dict[int, float] = field(default_factory=dict)

    @property
    def forward_speedup(self) -> float:
        return self.forward_sps[self.workers] / self.forward_sps[1]

    @property
    def training_speedup(self) -> float:
        return self.training_sps[self.workers] / self.training_sps[1]

    def render(self) -> str:
        lines = []
        for w in sorted(self.forward_sps):
            lines.append(f"bench forward workers={w} "
                         f"sps={self.forward_sps[w]:.2f}")
        for w in sorted(self.training_sps):
            lines.append(f"bench training workers={w} "
                         f"sps={self.training_sps[w]:.2f}")
        lines.append(f"bench speedup forward={self.forward_speedup:.2f} "
                     f"training={self.training_speedup:.2f} "
                     f"workers={self.workers}")
        return "\n".join(lines)


def _measure(step, n_samples: int, seconds: float) -> float:
    # One full pass to warm compiled kernels before the clock starts.
    for i in range(n_samples):
        step(i)
    done = 0
    started = time.perf_counter()
    while True:
        step(done % n_samples)
        done += 1
        elapsed = time.perf_counter() - started
        if elapsed >= seconds and done >= n_samples:
            return done / elapsed


def bench(spec: NetworkSpec, dataset, workers: int,
          seconds: float = 2.0, seed: int = 0, **net_kwargs) -> BenchReport:
    """Measure forward-only and full-training throughput at 1 and at
    `workers` worker threads. workers == 1 reuses the single measurement,
    so its reported speedup is exactly 1.0."""
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    net = NetworkState(spec, seed, **net_kwargs)
    images = dataset.images
    labels = dataset.labels
    targets = [targets_for(int(l), net.n_classes) for l in labels]
    n = len(images)

    def forward_step(i):
        net.forward(images[i])

    def training_step(i):
        net.train_step(images[i], targets[i], 1e-6)

    report = BenchReport(workers=workers)
    saved = kernels.get_workers()
    try:
        for w in sorted({1, workers}):
            kernels.set_workers(w)
            report.forward_sps[w] = _measure(forward_step, n, seconds)
            report.training_sps[w] = _measure(training_step, n, seconds)
    finally:
        kernels.set_workers(saved)
    report.forward_sps.setdefault(workers, report.forward_sps[1])
    report.training_sps.setdefault(workers, report.training_sps[1])
    return report
