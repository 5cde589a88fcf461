"""Procedural glyph dataset for desk-scale runs.

Each class is a fixed random blob prototype; samples are deformed copies
(affine plus elastic, through the augmentation module) with pixel noise.
Entirely seeded, so train/test splits are reproducible everywhere, which
makes this the stand-in workload when the real benchmark files are not on
disk.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .augment import DeformationConfig, deform_channels, sample_params
from .datasets import Dataset, from_bytes, write_idx

GLYPH_DEFORM = DeformationConfig(translate_max=0.08, rotate_max=12.0,
                                 scale_max=0.12, shear_max=8.0,
                                 elastic_sigma=4.0, elastic_alpha_max=10.0)


def _prototype(cls: int, size: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, cls, 0x917])
    rough = ndimage.gaussian_filter(rng.normal(size=(size, size)), size / 7.0)
    mask = (rough > np.quantile(rough, 0.72)).astype(np.float64)
    return 255.0 * np.clip(ndimage.gaussian_filter(mask, 0.8), 0.0, 1.0)


def make_glyph_images(n: int, n_classes: int = 10, size: int = 28,
                      seed: int = 0, split: str = "train",
                      deform: DeformationConfig = GLYPH_DEFORM):
    """(n, size, size) uint8 images and their labels, balanced by class."""
    protos = np.stack([_prototype(c, size, seed) for c in range(n_classes)])
    tag = 0 if split == "train" else 1
    images = np.empty((n, size, size), dtype=np.uint8)
    labels = np.empty(n, dtype=np.int32)
    for i in range(n):
        cls = i % n_classes
        params = sample_params(deform, [seed, tag, i])
        warped = deform_channels(protos[cls][np.newaxis], params)[0]
        noise = np.random.default_rng([seed, tag, i, 0xA2]).normal(0.0, 8.0,
                                                                   warped.shape)
        images[i] = np.clip(warped + noise, 0, 255).astype(np.uint8)
        labels[i] = cls
    return images, labels


def make_glyph_dataset(n: int, n_classes: int = 10, size: int = 28,
                       seed: int = 0, split: str = "train",
                       deform: DeformationConfig = GLYPH_DEFORM,
                       dtype=None) -> Dataset:
    images, labels = make_glyph_images(n, n_classes, size, seed, split, deform)
    return from_bytes(images[:, np.newaxis], labels, n_classes, split, dtype)


def write_glyph_idx(directory, n_train: int, n_test: int, seed: int = 0,
                    n_classes: int = 10, size: int = 28) -> None:
    """Write a ready-to-train IDX pair layout into a directory."""
    import os
    os.makedirs(directory, exist_ok=True)
    tr_img, tr_lab = make_glyph_images(n_train, n_classes, size, seed, "train")
    te_img, te_lab = make_glyph_images(n_test, n_classes, size, seed, "test")
    write_idx(tr_img, tr_lab,
              os.path.join(directory, "train-images-idx3-ubyte"),
              os.path.join(directory, "train-labels-idx1-ubyte"))
    write_idx(te_img, te_lab,
              os.path.join(directory, "t10k-images-idx3-ubyte"),
              os.path.join(directory, "t10k-labels-idx1-ubyte"))
