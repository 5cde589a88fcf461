"""Network geometry and inter-map connectivity.

A convolutional transition is described by a ConnectionTable: which source
maps feed which destination maps, plus where each connected pair's kernel
weights live inside the layer's flat weight arena. The arena is tiled as,
per destination map, one Kx*Ky block per incoming connection followed by a
single bias slot, so blocks are disjoint and cover the arena exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GeometryError


def output_map_size(prev: int, kernel: int, skip: int) -> int:
    """Number of kernel placements along one axis.

    The kernel must sit completely inside the input; successive placements
    advance by skip + 1 pixels. Fractional quotients floor (trailing cells
    are simply never covered).
    """
    if kernel < 1 or prev < 1:
        raise GeometryError(f"sizes must be >= 1, got prev={prev} kernel={kernel}")
    if skip < 0:
        raise GeometryError(f"skip must be >= 0, got {skip}")
    if kernel > prev:
        raise GeometryError(f"kernel {kernel} larger than input {prev}")
    return (prev - kernel) // (skip + 1) + 1


def invert_table(forward: list[list[int]]) -> list[list[int]]:
    """Transpose per-destination source lists into per-source destination lists."""
    n_src = 1 + max((s for row in forward for s in row), default=-1)
    backward = [[] for _ in range(n_src)]
    for dest, srcs in enumerate(forward):
        for s in srcs:
            backward[s].append(dest)
    return backward


@dataclass
class ConnectionTable:
    """Forward/backward connectivity plus weight arena layout for one transition.

    forward[d] lists the source maps feeding destination map d; backward is
    its exact transpose. weight_index[d, s] is the arena offset of the
    kx*ky weight block of pair (d, s), or -1 when unconnected.
    """

    n_src: int
    n_dest: int
    kx: int
    ky: int
    forward: list[list[int]]
    backward: list[list[int]] = field(init=False)
    weight_index: np.ndarray = field(init=False)
    bias_offset: np.ndarray = field(init=False)
    pairs: np.ndarray = field(init=False)
    pair_offsets: np.ndarray = field(init=False)
    arena_size: int = field(init=False)

    def __post_init__(self):
        if self.n_src < 1 or self.n_dest < 1:
            raise ConfigError("map counts must be >= 1")
        if self.kx < 1 or self.ky < 1:
            raise GeometryError("kernel dimensions must be >= 1")
        if len(self.forward) != self.n_dest:
            raise ConfigError("forward table must have one row per destination map")
        for d, row in enumerate(self.forward):
            if len(set(row)) != len(row):
                raise ConfigError(f"duplicate source in row {d}")
            if any(not 0 <= s < self.n_src for s in row):
                raise ConfigError(f"source index out of range in row {d}")
        back = invert_table(self.forward)
        back += [[] for _ in range(self.n_src - len(back))]
        self.backward = back

        block = self.kx * self.ky
        self.weight_index = np.full((self.n_dest, self.n_src), -1, dtype=np.int64)
        self.bias_offset = np.zeros(self.n_dest, dtype=np.int64)
        pairs = []
        offsets = []
        pos = 0
        for d, row in enumerate(self.forward):
            for s in row:
                self.weight_index[d, s] = pos
                pairs.append((d, s))
                offsets.append(pos)
                pos += block
            self.bias_offset[d] = pos
            pos += 1
        self.arena_size = pos
        self.pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        self.pair_offsets = np.asarray(offsets, dtype=np.int64)
        self._pair_dest = np.ascontiguousarray(self.pairs[:, 0])
        self._pair_src = np.ascontiguousarray(self.pairs[:, 1])

        # Flattened copies consumed by the compiled kernels.
        counts = np.asarray([len(r) for r in self.forward], dtype=np.int64)
        self._fwd_offsets = np.concatenate(([0], np.cumsum(counts)))
        self._fwd_srcs = np.asarray(
            [s for row in self.forward for s in row], dtype=np.int64)
        self._fwd_widx = np.asarray(
            [self.weight_index[d, s] for d, row in enumerate(self.forward) for s in row],
            dtype=np.int64)
        counts = np.asarray([len(r) for r in self.backward], dtype=np.int64)
        self._bwd_offsets = np.concatenate(([0], np.cumsum(counts)))
        self._bwd_dests = np.asarray(
            [d for row in self.backward for d in row], dtype=np.int64)
        self._bwd_widx = np.asarray(
            [self.weight_index[d, s] for s, row in enumerate(self.backward) for d in row],
            dtype=np.int64)

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    def connected(self, dest: int, src: int) -> bool:
        return self.weight_index[dest, src] >= 0


def build_full_table(src_maps: int, dest_maps: int, kernel: tuple[int, int]) -> ConnectionTable:
    """Every destination map sees every source map."""
    kx, ky = kernel
    forward = [list(range(src_maps)) for _ in range(dest_maps)]
    return ConnectionTable(src_maps, dest_maps, kx, ky, forward)


def build_random_table(src_maps: int, dest_maps: int, in_degree: int,
                       seed, kernel: tuple[int, int]) -> ConnectionTable:
    """Sparse table: each destination samples in_degree distinct sources.

    Redraws the whole table until every source map feeds at least one
    destination, so no map's parameters are silently orphaned. Rows are
    kept sorted, which makes in_degree == src_maps coincide with the full
    table.
    """
    if not 1 <= in_degree <= src_maps:
        raise ConfigError(
            f"in_degree {in_degree} outside [1, {src_maps}]")
    if in_degree * dest_maps < src_maps:
        raise ConfigError(
            f"in_degree {in_degree} x {dest_maps} maps cannot cover "
            f"{src_maps} sources")
    rng = np.random.default_rng(seed)
    while True:
        forward = [sorted(rng.choice(src_maps, size=in_degree, replace=False).tolist())
                   for _ in range(dest_maps)]
        used = set()
        for row in forward:
            used.update(row)
        if len(used) == src_maps:
            break
    kx, ky = kernel
    return ConnectionTable(src_maps, dest_maps, kx, ky, forward)


@dataclass
class LayerSpec:
    """One stanza of an architecture description, plus resolved geometry."""

    kind: str                      # input | image_processing | convolutional |
                                   # max_pooling | fully_connected | output
    maps: int = 0                  # conv map count / input channels
    kernel: tuple[int, int] = (0, 0)
    skip: tuple[int, int] = (0, 0)
    pool: tuple[int, int] = (0, 0)
    neurons: int = 0               # fully_connected / output width
    connectivity: str = "full"     # 'full' or 'random'
    in_degree: int = 0             # for random connectivity
    filters: tuple[str, ...] = ()  # image_processing selection names
    # geometry, filled in by resolve_geometry:
    out_maps: int = 0
    out_width: int = 0
    out_height: int = 0

    @property
    def is_spatial(self) -> bool:
        return self.kind in ("input", "image_processing", "convolutional", "max_pooling")


@dataclass
class NetworkSpec:
    """Validated layer stack with all per-layer sizes resolved."""

    layers: list[LayerSpec]

    @property
    def input_layer(self) -> LayerSpec:
        return self.layers[0]

    @property
    def n_classes(self) -> int:
        return self.layers[-1].neurons

    def __len__(self):
        return len(self.layers)
