"""Worker scaling on a wide network.

Forward, delta pulling and weight gradients parallelize over maps and
kernel blocks with one owner per output slice, so adding workers changes
speed and nothing else. Expect near-linear scaling on real multi-core
hardware and not much on shared or SMT-limited machines.
"""

import os

import numpy as np

import convkit as ck
from convkit.bench import bench

spec = ck.parse_architecture(
    "input 1x24x24; conv 100M k5x5 s1x1; maxpool 2x2; "
    "conv 100M k3x3 s0x0 rand10; fc 100N; output 10")

rng = np.random.default_rng(0)
images = rng.integers(0, 256, (8, 1, 24, 24), dtype=np.uint8)
data = ck.from_bytes(images, rng.integers(0, 10, 8), 10, "train",
                     dtype=np.float32)

workers = min(4, os.cpu_count() or 1)
print(f"host CPUs: {os.cpu_count()}, benchmarking 1 vs {workers} workers")
report = bench(spec, data, workers=workers, seconds=2.0, dtype=np.float32)
print(report.render())
