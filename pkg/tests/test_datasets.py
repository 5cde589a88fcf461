import gzip
import struct

import numpy as np
import pytest

import convkit as ck
from convkit.datasets import (denormalize, load_cifar10, load_idx, load_norb,
                              normalize, write_idx)
from convkit.errors import DataFormatError

RNG = np.random.default_rng(31)

# Fixtures below are built byte by byte from the public container layouts,
# independently of the package's writer, so they stand as the oracle.


def idx_images_bytes(images):
    n, rows, cols = images.shape
    return struct.pack(">IIII", 0x00000803, n, rows, cols) + images.tobytes()


def idx_labels_bytes(labels):
    return struct.pack(">II", 0x00000801, len(labels)) + bytes(labels)


def cifar_record(label, r_plane, g_plane, b_plane):
    return bytes([label]) + r_plane.tobytes() + g_plane.tobytes() \
        + b_plane.tobytes()


def norb_dat_bytes(pairs):
    n, two, rows, cols = pairs.shape
    header = struct.pack("<iiiiii", 0x1E3D4C55, 4, n, two, rows, cols)
    return header + pairs.tobytes()


def norb_cat_bytes(labels):
    header = struct.pack("<iiiii", 0x1E3D4C54, 1, len(labels), 1, 1)
    return header + np.asarray(labels, dtype="<i4").tobytes()


def test_normalize_endpoints_and_midpoint():
    assert normalize(0) == -1.0
    assert normalize(255) == 1.0
    assert normalize(128) == pytest.approx(128 / 127.5 - 1.0, abs=1e-15)
    assert abs(normalize(128) - 0.00392) < 1e-5


def test_idx_round_trip(tmp_path):
    images = RNG.integers(0, 256, (2, 4, 5), dtype=np.uint8)
    labels = [3, 7]
    (tmp_path / "imgs").write_bytes(idx_images_bytes(images))
    (tmp_path / "labs").write_bytes(idx_labels_bytes(labels))
    data = load_idx(tmp_path / "imgs", tmp_path / "labs", dtype=np.float64)
    assert len(data) == 2
    assert data.channels == 1
    np.testing.assert_array_equal(data.labels, labels)
    np.testing.assert_array_equal(denormalize(data.images[:, 0]), images)
    np.testing.assert_array_equal(data.images[1, 0],
                                  normalize(images[1]))


def test_idx_gzip_transparency(tmp_path):
    images = RNG.integers(0, 256, (1, 3, 3), dtype=np.uint8)
    (tmp_path / "imgs.gz").write_bytes(gzip.compress(idx_images_bytes(images)))
    (tmp_path / "labs.gz").write_bytes(gzip.compress(idx_labels_bytes([1])))
    data = load_idx(tmp_path / "imgs.gz", tmp_path / "labs.gz")
    np.testing.assert_array_equal(denormalize(data.images[:, 0]), images)


def test_idx_wrong_magic(tmp_path):
    images = RNG.integers(0, 256, (1, 2, 2), dtype=np.uint8)
    (tmp_path / "imgs").write_bytes(idx_images_bytes(images))
    # labels file carrying the images magic must be rejected
    bad = struct.pack(">II", 0x00000803, 1) + b"\x00"
    (tmp_path / "labs").write_bytes(bad)
    with pytest.raises(DataFormatError, match="magic"):
        load_idx(tmp_path / "imgs", tmp_path / "labs")


def test_idx_count_mismatch(tmp_path):
    images = RNG.integers(0, 256, (3, 2, 2), dtype=np.uint8)
    (tmp_path / "imgs").write_bytes(idx_images_bytes(images))
    (tmp_path / "labs").write_bytes(idx_labels_bytes([0, 1]))
    with pytest.raises(DataFormatError, match="labels"):
        load_idx(tmp_path / "imgs", tmp_path / "labs")


def test_idx_truncated(tmp_path):
    images = RNG.integers(0, 256, (2, 4, 4), dtype=np.uint8)
    (tmp_path / "imgs").write_bytes(idx_images_bytes(images)[:-5])
    (tmp_path / "labs").write_bytes(idx_labels_bytes([0, 1]))
    with pytest.raises(DataFormatError, match="expected"):
        load_idx(tmp_path / "imgs", tmp_path / "labs")


def test_write_idx_inverse_of_load(tmp_path):
    images = RNG.integers(0, 256, (5, 6, 6), dtype=np.uint8)
    labels = RNG.integers(0, 10, 5).astype(np.uint8)
    write_idx(images, labels, tmp_path / "i", tmp_path / "l")
    assert (tmp_path / "i").read_bytes() == idx_images_bytes(images)
    assert (tmp_path / "l").read_bytes() == idx_labels_bytes(labels.tolist())


def test_cifar_single_record(tmp_path):
    r = np.arange(1024, dtype=np.uint8).reshape(32, 32)
    g = (r + 1).astype(np.uint8)
    b = (r + 2).astype(np.uint8)
    (tmp_path / "batch.bin").write_bytes(cifar_record(7, r, g, b))
    data = load_cifar10([tmp_path / "batch.bin"], dtype=np.float64)
    assert len(data) == 1
    assert data.channels == 3
    assert data.labels[0] == 7
    np.testing.assert_array_equal(denormalize(data.images[0, 0]), r)
    np.testing.assert_array_equal(denormalize(data.images[0, 1]), g)
    np.testing.assert_array_equal(denormalize(data.images[0, 2]), b)


def test_cifar_empty_file(tmp_path):
    (tmp_path / "batch.bin").write_bytes(b"")
    with pytest.raises(DataFormatError):
        load_cifar10([tmp_path / "batch.bin"])


def test_cifar_bad_length(tmp_path):
    (tmp_path / "batch.bin").write_bytes(b"\x00" * 3072)
    with pytest.raises(DataFormatError, match="multiple"):
        load_cifar10([tmp_path / "batch.bin"])


def test_cifar_label_out_of_range(tmp_path):
    plane = np.zeros((32, 32), dtype=np.uint8)
    (tmp_path / "batch.bin").write_bytes(cifar_record(10, plane, plane, plane))
    with pytest.raises(DataFormatError, match="label"):
        load_cifar10([tmp_path / "batch.bin"])


def test_norb_round_trip(tmp_path):
    pairs = RNG.integers(0, 256, (1, 2, 4, 4), dtype=np.uint8)
    (tmp_path / "d.mat").write_bytes(norb_dat_bytes(pairs))
    (tmp_path / "c.mat").write_bytes(norb_cat_bytes([3]))
    data = load_norb(tmp_path / "d.mat", tmp_path / "c.mat", dtype=np.float64)
    assert len(data) == 1
    assert data.channels == 2
    assert data.labels[0] == 3
    np.testing.assert_array_equal(denormalize(data.images[0]), pairs[0])


def test_norb_swapped_paths_fail_on_magic(tmp_path):
    pairs = RNG.integers(0, 256, (1, 2, 4, 4), dtype=np.uint8)
    (tmp_path / "d.mat").write_bytes(norb_dat_bytes(pairs))
    (tmp_path / "c.mat").write_bytes(norb_cat_bytes([0]))
    with pytest.raises(DataFormatError, match="magic"):
        load_norb(tmp_path / "c.mat", tmp_path / "d.mat")


def test_norb_category_out_of_range(tmp_path):
    pairs = RNG.integers(0, 256, (1, 2, 4, 4), dtype=np.uint8)
    (tmp_path / "d.mat").write_bytes(norb_dat_bytes(pairs))
    (tmp_path / "c.mat").write_bytes(norb_cat_bytes([5]))
    with pytest.raises(DataFormatError, match="category"):
        load_norb(tmp_path / "d.mat", tmp_path / "c.mat")


def test_norb_count_mismatch(tmp_path):
    pairs = RNG.integers(0, 256, (2, 2, 4, 4), dtype=np.uint8)
    (tmp_path / "d.mat").write_bytes(norb_dat_bytes(pairs))
    (tmp_path / "c.mat").write_bytes(norb_cat_bytes([0]))
    with pytest.raises(DataFormatError):
        load_norb(tmp_path / "d.mat", tmp_path / "c.mat")


def test_norb_truncated_data(tmp_path):
    pairs = RNG.integers(0, 256, (2, 2, 4, 4), dtype=np.uint8)
    (tmp_path / "d.mat").write_bytes(norb_dat_bytes(pairs)[:-3])
    (tmp_path / "c.mat").write_bytes(norb_cat_bytes([0, 1]))
    with pytest.raises(DataFormatError, match="expected"):
        load_norb(tmp_path / "d.mat", tmp_path / "c.mat")


def test_dataset_limit():
    images = RNG.uniform(-1, 1, (10, 1, 4, 4))
    data = ck.Dataset(images, np.arange(10, dtype=np.int32) % 3, 3, "train")
    cut = data.limit(4)
    assert len(cut) == 4
    np.testing.assert_array_equal(cut.images, images[:4])
    assert data.limit(None) is data
    assert data.limit(100) is data
    with pytest.raises(DataFormatError):
        data.limit(0)


def test_channel_count_contract():
    # one channel for IDX digits, two for stereo pairs, three for color
    idx_img = RNG.integers(0, 256, (1, 2, 2), dtype=np.uint8)
    assert ck.from_bytes(idx_img[:, np.newaxis], [0], 10, "train").channels == 1
    stereo = RNG.integers(0, 256, (1, 2, 3, 3), dtype=np.uint8)
    assert ck.from_bytes(stereo, [0], 5, "train").channels == 2
    rgb = RNG.integers(0, 256, (1, 3, 3, 3), dtype=np.uint8)
    assert ck.from_bytes(rgb, [0], 10, "train").channels == 3
