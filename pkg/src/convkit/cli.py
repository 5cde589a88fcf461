"""Command line entry point.

Commands: train, eval, gradcheck, bench, inspect. Exit codes are part of
the interface: 0 success, 1 failed gradient check, 2 usage, 3 bad
configuration (including missing files), 4 malformed data file, 5
impossible geometry.

Metrics log format (one line per epoch, stable across versions):
    epoch=<n> lr=<r> train_err=<p> test_err=<p> secs=<s>
With --no-timing all secs fields read 0.000, which makes two identical
invocations produce byte-identical logs.
"""

from __future__ import annotations

import argparse
import glob
import os
import sys

import numpy as np

from . import kernels, precision
from .arch import parse_experiment
from .augment import DeformationConfig
from .bench import bench
from .datasets import Dataset, from_bytes, load_cifar10, load_idx, load_norb
from .errors import (ConfigError, ConvkitError, DataFormatError,
                     DimensionError, GeometryError, PrecisionError)
from .gradcheck import check_network
from .network import NetworkState
from .training import (TrainConfig, evaluate, run_experiment, run_training)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DATA_FORMAT = 4
EXIT_GEOMETRY = 5

_CONFIG_KEYS = {
    "eta0": float, "eta_decay": float, "eta_floor": float,
    "epochs": int, "shuffle": None, "test_every": int,
    "deform_translate": float, "deform_rotate": float, "deform_scale": float,
    "deform_shear": float, "deform_elastic_sigma": float,
    "deform_elastic_alpha": float,
}


def _read_arch(path):
    if not os.path.exists(path):
        raise ConfigError(f"architecture file not found: {path}")
    with open(path) as f:
        return parse_experiment(f.read())


def _parse_bool(value: str) -> bool:
    if value.lower() in ("1", "true", "yes", "on"):
        return True
    if value.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def _train_config(file_cfg: dict, args) -> TrainConfig:
    values = {}
    for key, raw in file_cfg.items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            values[key] = _parse_bool(raw) if _CONFIG_KEYS[key] is None \
                else _CONFIG_KEYS[key](raw)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {raw!r}") from None
    deform = DeformationConfig(
        translate_max=values.get("deform_translate", 0.0),
        rotate_max=values.get("deform_rotate", 0.0),
        scale_max=values.get("deform_scale", 0.0),
        shear_max=values.get("deform_shear", 0.0),
        elastic_sigma=values.get("deform_elastic_sigma", 6.0),
        elastic_alpha_max=values.get("deform_elastic_alpha", 0.0),
    )
    return TrainConfig(
        epochs=args.epochs if args.epochs is not None
        else values.get("epochs", 5),
        eta0=args.eta0 if args.eta0 is not None else values.get("eta0", 1e-3),
        eta_decay=args.eta_decay if args.eta_decay is not None
        else values.get("eta_decay", 1.0),
        eta_floor=args.eta_floor if args.eta_floor is not None
        else values.get("eta_floor", 0.0),
        seed=args.seed,
        deformation=deform,
        shuffle=False if args.no_shuffle else values.get("shuffle", True),
        test_every=args.test_every if args.test_every is not None
        else values.get("test_every", 1),
    )


def _find(data_dir: str, pattern: str) -> str:
    hits = sorted(glob.glob(os.path.join(data_dir, pattern))
                  + glob.glob(os.path.join(data_dir, pattern + ".gz")))
    if not hits:
        raise ConfigError(f"no file matching {pattern!r} in {data_dir}")
    return hits[0]


def load_split(kind: str, data_dir: str, split: str, dtype) -> Dataset:
    if not data_dir:
        raise ConfigError("--data is required for this command")
    if not os.path.isdir(data_dir):
        raise ConfigError(f"data directory not found: {data_dir}")
    if kind == "mnist":
        prefix = "train" if split == "train" else "t10k"
        return load_idx(_find(data_dir, f"{prefix}-images-idx3-ubyte"),
                        _find(data_dir, f"{prefix}-labels-idx1-ubyte"),
                        dtype=dtype, split=split)
    if kind == "cifar10":
        if split == "train":
            batches = sorted(glob.glob(os.path.join(data_dir, "data_batch_*")))
            if not batches:
                raise ConfigError(f"no data_batch_* files in {data_dir}")
        else:
            batches = [_find(data_dir, "test_batch*")]
        return load_cifar10(batches, dtype=dtype, split=split)
    if kind == "norb":
        tag = "training" if split == "train" else "testing"
        return load_norb(_find(data_dir, f"*{tag}-dat*"),
                         _find(data_dir, f"*{tag}-cat*"),
                         dtype=dtype, split=split)
    raise ConfigError(f"unknown dataset kind {kind!r}")


class _Metrics:
    """Writes each line to stdout and, when --out is set, to metrics.log."""

    def __init__(self, out_dir, no_timing):
        self.no_timing = no_timing
        self.file = None
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            self.file = open(os.path.join(out_dir, "metrics.log"), "w")

    def secs(self, value: float) -> str:
        return "0.000" if self.no_timing else f"{value:.3f}"

    def emit(self, line: str):
        print(line)
        if self.file:
            self.file.write(line + "\n")
            self.file.flush()

    def close(self):
        if self.file:
            self.file.close()


def _fmt_err(value: float) -> str:
    return "nan" if np.isnan(value) else f"{value:.4f}"


def _cmd_train(args) -> int:
    spec, file_cfg = _read_arch(args.arch)
    config = _train_config(file_cfg, args)
    kernels.set_workers(args.workers)
    dtype = precision.dtype()
    train_data = load_split(args.dataset, args.data, "train", dtype)
    test_data = load_split(args.dataset, args.data, "test", dtype)
    if args.limit is not None:
        train_data = train_data.limit(args.limit)

    metrics = _Metrics(args.out, args.no_timing)
    try:
        def on_epoch(st):
            metrics.emit(f"epoch={st.epoch} lr={st.lr:.6g} "
                         f"train_err={_fmt_err(st.train_err)} "
                         f"test_err={_fmt_err(st.test_err)} "
                         f"secs={metrics.secs(st.seconds)}")

        if args.runs == 1:
            net = NetworkState(spec, args.seed, dtype=dtype)
            record = run_training(net, train_data, test_data, config, on_epoch)
            metrics.emit(f"summary tfbv={_fmt_err(record.tfbv)} "
                         f"bt={_fmt_err(record.bt)} "
                         f"best_epoch={record.best_epoch} "
                         f"secs_per_epoch={metrics.secs(record.seconds_per_epoch)}")
            if args.out:
                net.save_weights(os.path.join(args.out, "weights.npz"))
        else:
            counter = {"run": -1}

            def on_epoch_runs(st):
                if st.epoch == 0:
                    counter["run"] += 1
                    metrics.emit(f"run index={counter['run']} "
                                 f"seed={config.seed + counter['run']}")
                on_epoch(st)

            summary = run_experiment(spec, train_data, test_data, config,
                                     args.runs, on_epoch=on_epoch_runs,
                                     dtype=dtype)
            for r, rec in enumerate(summary.runs):
                metrics.emit(f"run summary index={r} tfbv={_fmt_err(rec.tfbv)} "
                             f"bt={_fmt_err(rec.bt)} best_epoch={rec.best_epoch}")
            std = "na" if summary.tfbv_std is None else f"{summary.tfbv_std:.4f}"
            metrics.emit(f"experiment runs={args.runs} "
                         f"tfbv_mean={_fmt_err(summary.tfbv_mean)} "
                         f"tfbv_std={std} "
                         f"secs_per_epoch={metrics.secs(summary.seconds_per_epoch)}")
    finally:
        metrics.close()
    return EXIT_OK


def _cmd_eval(args) -> int:
    spec, _ = _read_arch(args.arch)
    kernels.set_workers(args.workers)
    dtype = precision.dtype()
    data = load_split(args.dataset, args.data, args.split, dtype)
    if args.limit is not None:
        data = data.limit(args.limit)
    net = NetworkState(spec, args.seed, dtype=dtype)
    if args.weights:
        if not os.path.exists(args.weights):
            raise ConfigError(f"weight file not found: {args.weights}")
        net.load_weights(args.weights)
    err = evaluate(net, data)
    print(f"eval split={args.split} err={err:.4f} samples={len(data)}")
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    if precision.get_precision() != "double":
        raise PrecisionError(
            "gradcheck needs --precision double (finite differences drown "
            "in single-precision rounding)")
    spec, _ = _read_arch(args.arch)
    report = check_network(spec, args.seed, tolerance=args.tol)
    kinds = {i: l.kind for i, l in enumerate(spec.layers)}
    print(report.render(kinds))
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_bench(args) -> int:
    spec, _ = _read_arch(args.arch)
    dtype = precision.dtype()
    if args.data:
        data = load_split(args.dataset, args.data, "train", dtype)
        data = data.limit(args.limit or 32)
    else:
        first = spec.input_layer
        n = args.limit or 16
        rng = np.random.default_rng(args.seed)
        images = rng.integers(0, 256, (n, first.maps, first.out_height,
                                       first.out_width), dtype=np.uint8)
        labels = rng.integers(0, spec.n_classes, n)
        data = from_bytes(images, labels, spec.n_classes, "train", dtype)
    report = bench(spec, data, args.workers, seconds=args.seconds,
                   seed=args.seed, dtype=dtype)
    print(report.render())
    return EXIT_OK


def _cmd_inspect(args) -> int:
    spec, file_cfg = _read_arch(args.arch)
    total = 0
    prev_maps = 0
    prev_flat = 0
    print(f"{'idx':>3} {'kind':<18} {'maps':>5} {'size':>9} "
          f"{'detail':<22} {'params':>9}")
    for idx, l in enumerate(spec.layers):
        params = 0
        detail = ""
        if l.kind == "convolutional":
            kx, ky = l.kernel
            pairs = l.maps * (l.in_degree if l.connectivity == "random"
                              else prev_maps)
            params = pairs * kx * ky + l.maps
            detail = f"k{kx}x{ky} s{l.skip[0]}x{l.skip[1]}"
            if l.connectivity == "random":
                detail += f" rand{l.in_degree}"
        elif l.kind == "max_pooling":
            detail = f"pool {l.pool[0]}x{l.pool[1]}"
        elif l.kind == "image_processing":
            detail = ",".join(l.filters)
        elif l.kind in ("fully_connected", "output"):
            params = prev_flat * l.neurons + l.neurons
        size = f"{l.out_width}x{l.out_height}"
        print(f"{idx:>3} {l.kind:<18} {l.out_maps:>5} {size:>9} "
              f"{detail:<22} {params:>9}")
        total += params
        prev_maps = l.out_maps
        prev_flat = l.out_maps * l.out_width * l.out_height
    print(f"total parameters: {total}")
    if file_cfg:
        print("config: " + " ".join(f"{k}={v}" for k, v in sorted(file_cfg.items())))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convkit",
        description="Train and inspect configurable convolutional networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_data=True):
        p.add_argument("--arch", required=True, help="architecture file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--precision", choices=("single", "double"))
        if with_data:
            p.add_argument("--data", help="dataset directory")
            p.add_argument("--dataset", choices=("mnist", "cifar10", "norb"),
                           default="mnist")
            p.add_argument("--limit", type=int,
                           help="truncate the ingested training samples")

    p = sub.add_parser("train", help="online gradient-descent training")
    common(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--test-every", dest="test_every", type=int)
    p.add_argument("--eta0", type=float)
    p.add_argument("--eta-decay", dest="eta_decay", type=float)
    p.add_argument("--eta-floor", dest="eta_floor", type=float)
    p.add_argument("--no-shuffle", action="store_true")
    p.add_argument("--no-timing", action="store_true",
                   help="report secs=0.000 for reproducible logs")
    p.add_argument("--out", help="directory for metrics.log and weights.npz")

    p = sub.add_parser("eval", help="classification error of saved weights")
    common(p)
    p.add_argument("--weights", help="weights.npz from a training run")
    p.add_argument("--split", choices=("train", "test"), default="test")

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    common(p, with_data=False)
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("bench", help="worker-scaling throughput benchmark")
    common(p)
    p.add_argument("--seconds", type=float, default=2.0)

    p = sub.add_parser("inspect", help="print resolved geometry and sizes")
    common(p, with_data=False)
    return parser


_HANDLERS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "gradcheck": _cmd_gradcheck,
    "bench": _cmd_bench,
    "inspect": _cmd_inspect,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    mode = args.precision or ("double" if args.command == "gradcheck" else "single")
    precision.set_precision(mode)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, PrecisionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DataFormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA_FORMAT
    except (GeometryError, DimensionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_GEOMETRY
    except ConvkitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
