"""Bit-exact loaders for the three supported container formats.

All loaders raise DataFormatError on anything malformed (bad magic,
truncation, count mismatches, out-of-range labels) and never silently
truncate. Pixel bytes are mapped linearly onto [-1, 1].
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import precision
from .errors import DataFormatError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
NORB_DAT_MAGIC = 0x1E3D4C55     # matrix of bytes
NORB_CAT_MAGIC = 0x1E3D4C54     # matrix of 32-bit integers

CIFAR_RECORD = 3073             # 1 label byte + 3 * 32 * 32 channel planes


def normalize(raw):
    """Map byte values 0..255 linearly onto [-1, 1]."""
    return np.asarray(raw, dtype=np.float64) / 127.5 - 1.0


def denormalize(values) -> np.ndarray:
    """Inverse of normalize, rounded back to bytes."""
    return np.clip(np.rint((np.asarray(values, dtype=np.float64) + 1.0) * 127.5),
                   0, 255).astype(np.uint8)


class Sample(NamedTuple):
    channels: np.ndarray     # (c, h, w), normalized
    label: int


@dataclass
class Dataset:
    """Ordered labeled samples of homogeneous geometry."""

    images: np.ndarray       # (n, c, h, w), normalized reals
    labels: np.ndarray       # (n,) int32
    n_classes: int
    split: str               # 'train' or 'test'

    def __post_init__(self):
        if self.images.ndim != 4 or len(self.labels) != len(self.images):
            raise DataFormatError("images must be (n, c, h, w) with one label each")
        if len(self.images) == 0:
            raise DataFormatError("dataset is empty")
        bad = (self.labels < 0) | (self.labels >= self.n_classes)
        if bad.any():
            raise DataFormatError(
                f"label {int(self.labels[bad.argmax()])} outside "
                f"[0, {self.n_classes})")

    def __len__(self):
        return len(self.images)

    def __getitem__(self, i) -> Sample:
        return Sample(self.images[i], int(self.labels[i]))

    @property
    def channels(self) -> int:
        return self.images.shape[1]

    @property
    def height(self) -> int:
        return self.images.shape[2]

    @property
    def width(self) -> int:
        return self.images.shape[3]

    def limit(self, n: int | None) -> "Dataset":
        """First n samples (file order); None means everything."""
        if n is None or n >= len(self):
            return self
        if n < 1:
            raise DataFormatError(f"limit must be >= 1, got {n}")
        return Dataset(self.images[:n], self.labels[:n], self.n_classes, self.split)


def from_bytes(images_u8: np.ndarray, labels, n_classes: int, split: str,
               dtype=None) -> Dataset:
    """Build a dataset from raw (n, c, h, w) byte images."""
    images_u8 = np.asarray(images_u8, dtype=np.uint8)
    if images_u8.ndim == 3:
        images_u8 = images_u8[:, np.newaxis]
    images = normalize(images_u8).astype(dtype or precision.dtype())
    return Dataset(images, np.asarray(labels, dtype=np.int32), n_classes, split)


def _read_bytes(path) -> bytes:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:2] == b"\x1f\x8b":      # transparently accept gzipped files
        blob = gzip.decompress(blob)
    return blob


def _be32(blob: bytes, offset: int, path) -> int:
    if offset + 4 > len(blob):
        raise DataFormatError(f"{path}: truncated header")
    return struct.unpack_from(">I", blob, offset)[0]


def load_idx(images_path, labels_path, dtype=None,
             n_classes: int = 10, split: str = "train") -> Dataset:
    """MNIST-style IDX pair: big-endian headers, unsigned byte pixels."""
    img_blob = _read_bytes(images_path)
    magic = _be32(img_blob, 0, images_path)
    if magic != IDX_IMAGES_MAGIC:
        raise DataFormatError(
            f"{images_path}: bad magic 0x{magic:08X}, "
            f"expected 0x{IDX_IMAGES_MAGIC:08X}")
    count = _be32(img_blob, 4, images_path)
    rows = _be32(img_blob, 8, images_path)
    cols = _be32(img_blob, 12, images_path)
    need = 16 + count * rows * cols
    if len(img_blob) < need:
        raise DataFormatError(
            f"{images_path}: expected {need} bytes, found {len(img_blob)}")
    pixels = np.frombuffer(img_blob, dtype=np.uint8, count=count * rows * cols,
                           offset=16).reshape(count, rows, cols)

    lab_blob = _read_bytes(labels_path)
    magic = _be32(lab_blob, 0, labels_path)
    if magic != IDX_LABELS_MAGIC:
        raise DataFormatError(
            f"{labels_path}: bad magic 0x{magic:08X}, "
            f"expected 0x{IDX_LABELS_MAGIC:08X}")
    n_labels = _be32(lab_blob, 4, labels_path)
    if n_labels != count:
        raise DataFormatError(
            f"{labels_path}: {n_labels} labels for {count} images")
    if len(lab_blob) < 8 + n_labels:
        raise DataFormatError(f"{labels_path}: truncated label data")
    labels = np.frombuffer(lab_blob, dtype=np.uint8, count=n_labels, offset=8)

    return from_bytes(pixels[:, np.newaxis], labels, n_classes, split, dtype)


def write_idx(images_u8: np.ndarray, labels, images_path, labels_path) -> None:
    """Write an IDX pair; the exact inverse of load_idx for byte images."""
    images_u8 = np.asarray(images_u8, dtype=np.uint8)
    if images_u8.ndim != 3:
        raise DataFormatError("expected (n, rows, cols) byte images")
    n, rows, cols = images_u8.shape
    labels = np.asarray(labels, dtype=np.uint8)
    if labels.shape != (n,):
        raise DataFormatError(f"need {n} labels, got {labels.shape}")
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols))
        f.write(images_u8.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABELS_MAGIC, n))
        f.write(labels.tobytes())


def load_cifar10(batch_paths, dtype=None, split: str = "train") -> Dataset:
    """CIFAR-10 binary batches: per record one label byte followed by the
    red, green and blue 32x32 planes."""
    images = []
    labels = []
    for path in batch_paths:
        blob = _read_bytes(path)
        if len(blob) == 0 or len(blob) % CIFAR_RECORD:
            raise DataFormatError(
                f"{path}: length {len(blob)} is not a positive multiple "
                f"of {CIFAR_RECORD}")
        records = np.frombuffer(blob, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
        batch_labels = records[:, 0]
        if (batch_labels > 9).any():
            raise DataFormatError(
                f"{path}: label {int(batch_labels.max())} outside 0..9")
        labels.append(batch_labels)
        images.append(records[:, 1:].reshape(-1, 3, 32, 32))
    if not images:
        raise DataFormatError("no batch files given")
    return from_bytes(np.concatenate(images), np.concatenate(labels),
                      10, split, dtype)


def _norb_header(blob: bytes, path):
    if len(blob) < 8:
        raise DataFormatError(f"{path}: truncated header")
    magic, ndim = struct.unpack_from("<ii", blob, 0)
    n_dim_words = max(ndim, 3)      # at least three dimension words on disk
    if len(blob) < 8 + 4 * n_dim_words:
        raise DataFormatError(f"{path}: truncated dimension list")
    dims = struct.unpack_from(f"<{n_dim_words}i", blob, 8)[:ndim]
    return magic, dims, 8 + 4 * n_dim_words


def load_norb(dat_path, cat_path, dtype=None, split: str = "train") -> Dataset:
    """Small-NORB binary matrix pair: stereo uint8 images plus int32 labels."""
    dat_blob = _read_bytes(dat_path)
    magic, dims, offset = _norb_header(dat_blob, dat_path)
    if magic != NORB_DAT_MAGIC:
        raise DataFormatError(
            f"{dat_path}: bad magic 0x{magic:08X}, expected "
            f"0x{NORB_DAT_MAGIC:08X}")
    if len(dims) != 4 or dims[1] != 2:
        raise DataFormatError(
            f"{dat_path}: expected (n, 2, rows, cols) stereo data, got {dims}")
    n, _, rows, cols = dims
    need = offset + n * 2 * rows * cols
    if len(dat_blob) < need:
        raise DataFormatError(
            f"{dat_path}: expected {need} bytes, found {len(dat_blob)}")
    pairs = np.frombuffer(dat_blob, dtype=np.uint8, count=n * 2 * rows * cols,
                          offset=offset).reshape(n, 2, rows, cols)

    cat_blob = _read_bytes(cat_path)
    magic, dims, offset = _norb_header(cat_blob, cat_path)
    if magic != NORB_CAT_MAGIC:
        raise DataFormatError(
            f"{cat_path}: bad magic 0x{magic:08X}, expected "
            f"0x{NORB_CAT_MAGIC:08X}")
    if len(dims) != 1 or dims[0] != n:
        raise DataFormatError(
            f"{cat_path}: {dims} categories for {n} stereo pairs")
    if len(cat_blob) < offset + 4 * n:
        raise DataFormatError(f"{cat_path}: truncated category data")
    labels = np.frombuffer(cat_blob, dtype="<i4", count=n, offset=offset)
    if ((labels < 0) | (labels > 4)).any():
        raise DataFormatError(f"{cat_path}: category outside 0..4")

    return from_bytes(pairs, labels, 5, split, dtype)
