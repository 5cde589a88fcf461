"""On-line training image deformation.

Every sample gets freshly drawn parameters: an affine warp (scale, then
horizontal shear, then rotation, then translation, composed into a single
matrix about the image center) plus an elastic displacement field (uniform
noise smoothed by a Gaussian and scaled). Both are applied in one bilinear
interpolation pass; samples that land outside the image read the
background value. Only the trainer's training path calls into this module;
evaluation never deforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError
from .tensor import FeatureMap, from_array


@dataclass
class DeformationParams:
    """One sample's concrete deformation. All-default values are the identity."""

    translate: tuple[float, float] = (0.0, 0.0)   # fraction of width/height
    rotate: float = 0.0                           # degrees, counterclockwise
    scale: tuple[float, float] = (1.0, 1.0)
    shear_h: float = 0.0                          # degrees
    elastic_sigma: float = 6.0                    # px, field smoothing
    elastic_alpha: float = 0.0                    # px, field strength
    seed: int = 0                                 # elastic field seed

    def is_identity(self) -> bool:
        return (self.translate == (0.0, 0.0) and self.rotate == 0.0
                and self.scale == (1.0, 1.0) and self.shear_h == 0.0
                and self.elastic_alpha == 0.0)


@dataclass
class DeformationConfig:
    """Per-parameter maxima each training sample draws from uniformly."""

    translate_max: float = 0.0      # fraction of image size (0.05 = 5%)
    rotate_max: float = 0.0         # degrees
    scale_max: float = 0.0          # fractional deviation from 1
    shear_max: float = 0.0          # degrees
    elastic_sigma: float = 6.0      # px
    elastic_alpha_max: float = 0.0  # px

    def __post_init__(self):
        for name in ("translate_max", "rotate_max", "scale_max",
                     "shear_max", "elastic_alpha_max"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.elastic_alpha_max > 0 and self.elastic_sigma <= 0:
            raise ConfigError("elastic_sigma must be > 0 when elastic is on")

    def enabled(self) -> bool:
        return any(getattr(self, n) > 0 for n in
                   ("translate_max", "rotate_max", "scale_max",
                    "shear_max", "elastic_alpha_max"))


def sample_params(config: DeformationConfig, rng_seed) -> DeformationParams:
    """Draw one sample's deformation, deterministically from the seed."""
    rng = np.random.default_rng(rng_seed)
    # Fixed draw order keeps one parameter's setting from shifting the others.
    tx, ty, rot, sx, sy, shear = rng.uniform(-1.0, 1.0, 6)
    alpha = rng.uniform(0.0, 1.0)
    seed = int(rng.integers(0, 2**31 - 1))
    return DeformationParams(
        translate=(tx * config.translate_max, ty * config.translate_max),
        rotate=rot * config.rotate_max,
        scale=(1.0 + sx * config.scale_max, 1.0 + sy * config.scale_max),
        shear_h=shear * config.shear_max,
        elastic_sigma=config.elastic_sigma,
        elastic_alpha=alpha * config.elastic_alpha_max,
        seed=seed,
    )


def _affine_source_grid(width, height, params: DeformationParams):
    """Source coordinates (rows, cols) sampled for each output pixel."""
    sx, sy = params.scale
    if sx == 0 or sy == 0:
        raise ConfigError("scale factor 0 would collapse the image")
    rot = math.radians(params.rotate)
    shear = math.radians(params.shear_h)
    # Forward map: scale, then horizontal shear, then rotation; columns are
    # the images of the x/y unit vectors.
    m = np.array([[math.cos(rot), -math.sin(rot)],
                  [math.sin(rot), math.cos(rot)]]) \
        @ np.array([[1.0, math.tan(shear)], [0.0, 1.0]]) \
        @ np.array([[sx, 0.0], [0.0, sy]])
    inv = np.linalg.inv(m)
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    dx = params.translate[0] * width
    dy = params.translate[1] * height
    cols, rows = np.meshgrid(np.arange(width, dtype=np.float64),
                             np.arange(height, dtype=np.float64))
    rel = np.stack([cols - cx - dx, rows - cy - dy])
    src = np.tensordot(inv, rel, axes=1)
    return src[1] + cy, src[0] + cx


def _elastic_field(width, height, sigma, alpha, seed):
    rng = np.random.default_rng(seed)
    field_ = rng.uniform(-1.0, 1.0, size=(2, height, width))
    for axis in range(2):
        field_[axis] = ndimage.gaussian_filter(field_[axis], sigma,
                                               mode="constant", truncate=3.0)
    return alpha * field_       # (row displacement, col displacement)


def _interp(view, rows, cols, background):
    # grid-constant interpolates with the fill value near edges, so a
    # coordinate an ulp outside the grid still reads the border pixel.
    return ndimage.map_coordinates(view, [rows, cols], order=1,
                                   mode="grid-constant", cval=background)


def affine_deform(image: FeatureMap, params: DeformationParams,
                  background: float = 0.0) -> FeatureMap:
    """Inverse-mapped affine warp about the image center."""
    rows, cols = _affine_source_grid(image.width, image.height, params)
    return from_array(_interp(image.view, rows, cols, background),
                      dtype=image.dtype)


def elastic_deform(image: FeatureMap, sigma: float, alpha: float,
                   rng_seed, background: float = 0.0) -> FeatureMap:
    """Warp through a smoothed random displacement field."""
    if sigma <= 0:
        raise ConfigError(f"elastic sigma must be > 0, got {sigma}")
    if alpha == 0:
        return image.copy()
    disp = _elastic_field(image.width, image.height, sigma, alpha, rng_seed)
    cols, rows = np.meshgrid(np.arange(image.width, dtype=np.float64),
                             np.arange(image.height, dtype=np.float64))
    return from_array(_interp(image.view, rows + disp[0], cols + disp[1],
                              background), dtype=image.dtype)


def border_intensity(channel: np.ndarray) -> float:
    """Median intensity of the outer one-pixel frame, used as background."""
    frame = np.concatenate([channel[0], channel[-1],
                            channel[1:-1, 0], channel[1:-1, -1]])
    return float(np.median(frame))


def deform_channels(channels: np.ndarray, params: DeformationParams) -> np.ndarray:
    """Apply one sample's deformation to every channel of a (c, h, w) image
    in a single interpolation pass per channel."""
    if params.is_identity():
        return channels
    _, height, width = channels.shape
    rows, cols = _affine_source_grid(width, height, params)
    if params.elastic_alpha > 0:
        disp = _elastic_field(width, height, params.elastic_sigma,
                              params.elastic_alpha, params.seed)
        rows = rows + disp[0]
        cols = cols + disp[1]
    out = np.empty_like(channels)
    for c in range(channels.shape[0]):
        bg = border_intensity(channels[c])
        out[c] = _interp(channels[c], rows, cols, bg)
    return out
