"""Fixed image-processing filters applied ahead of the learnable stack.

Selections expand to filter pairs: 'sobel' and 'scharr' give the x/y edge
pair, 'hat<N>' gives the on-center and off-center contrast extractors of
size N. Responses keep the input size via replicated-border sampling, so
downstream geometry is unchanged, and outputs are ordered as the original
channels followed by each expanded filter's response per channel.
"""

from __future__ import annotations

import re

import numpy as np
from scipy import ndimage

from .errors import ConfigError, GeometryError
from .tensor import DEFAULT_PITCH_QUANTUM, MapStack, stack_from_array

SOBEL_X = np.array([[-1, 0, 1],
                    [-2, 0, 2],
                    [-1, 0, 1]], dtype=np.float64)
SCHARR_X = np.array([[-3, 0, 3],
                     [-10, 0, 10],
                     [-3, 0, 3]], dtype=np.float64)


class FixedFilterBank:
    """Named immutable kernels; construction is the only mutation point."""

    def __init__(self):
        self._filters: dict[str, np.ndarray] = {}

    def add(self, name: str, coeffs: np.ndarray) -> None:
        if name in self._filters:
            raise ConfigError(f"duplicate filter name {name!r}")
        coeffs = np.array(coeffs, dtype=np.float64)    # own a frozen copy
        if coeffs.ndim != 2:
            raise ConfigError("filter coefficients must be 2D")
        coeffs.flags.writeable = False
        self._filters[name] = coeffs

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self._filters[name]
        except KeyError:
            raise ConfigError(f"unknown filter {name!r}") from None

    def __contains__(self, name):
        return name in self._filters

    def names(self) -> list[str]:
        return list(self._filters)

    def save_text(self, path) -> None:
        """One filter per block: name, size line, then row-major coefficients."""
        with open(path, "w") as f:
            for name, coeffs in self._filters.items():
                h, w = coeffs.shape
                f.write(f"{name} {w}x{h}\n")
                for row in coeffs:
                    f.write(" ".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load_text(cls, path) -> "FixedFilterBank":
        bank = cls()
        with open(path) as f:
            lines = [ln.rstrip("\n") for ln in f]
        i = 0
        while i < len(lines):
            if not lines[i].strip():
                i += 1
                continue
            try:
                name, size = lines[i].split()
                w, h = map(int, size.split("x"))
                rows = [[float(v) for v in lines[i + 1 + r].split()] for r in range(h)]
            except (ValueError, IndexError) as e:
                raise ConfigError(f"bad filter file near line {i + 1}: {e}") from None
            coeffs = np.asarray(rows)
            if coeffs.shape != (h, w):
                raise ConfigError(f"filter {name!r} row width mismatch")
            bank.add(name, coeffs)
            i += 1 + h
        return bank


def make_contrast_filters(size: int, sigma_center: float, sigma_surround: float):
    """On/off-center contrast pair as a zero-sum, unit-norm difference of
    Gaussians. Returns (on_center, off_center) with off = -on."""
    if size < 1 or size % 2 == 0:
        raise ConfigError(f"contrast filter size must be odd, got {size}")
    if not 0 < sigma_center < sigma_surround:
        raise ConfigError(
            f"need 0 < sigma_center < sigma_surround, got "
            f"{sigma_center} and {sigma_surround}")
    half = size // 2
    g = np.arange(-half, half + 1, dtype=np.float64)
    xx, yy = np.meshgrid(g, g)
    r2 = xx * xx + yy * yy

    def gauss(sigma):
        k = np.exp(-r2 / (2.0 * sigma * sigma))
        return k / k.sum()

    on = gauss(sigma_center) - gauss(sigma_surround)
    on -= on.mean()                  # exact zero sum despite rounding
    on /= np.sqrt((on * on).sum())
    return on, -on


def default_bank(hat_sizes=()) -> FixedFilterBank:
    """Sobel/Scharr pairs plus a hat pair per requested odd size."""
    bank = FixedFilterBank()
    bank.add("sobel_x", SOBEL_X)
    bank.add("sobel_y", SOBEL_X.T)
    bank.add("scharr_x", SCHARR_X)
    bank.add("scharr_y", SCHARR_X.T)
    for size in hat_sizes:
        on, off = make_contrast_filters(size, size / 8.0, size / 4.0)
        bank.add(f"hat{size}_on", on)
        bank.add(f"hat{size}_off", off)
    return bank


_HAT_RE = re.compile(r"^hat(\d+)$")


def expand_selection(selection) -> list[str]:
    """Expand stanza names (sobel, scharr, hatN) to concrete filter names."""
    expanded = []
    for name in selection:
        if name in ("sobel", "scharr"):
            expanded += [f"{name}_x", f"{name}_y"]
            continue
        m = _HAT_RE.match(name)
        if m:
            n = int(m.group(1))
            if n % 2 == 0:
                raise ConfigError(f"hat size {n} must be odd")
            expanded += [f"hat{n}_on", f"hat{n}_off"]
            continue
        raise ConfigError(f"unknown filter selection {name!r}")
    return expanded


def bank_for_selection(selection) -> FixedFilterBank:
    hats = sorted({int(m.group(1)) for name in selection
                   if (m := _HAT_RE.match(name))})
    return default_bank(hat_sizes=hats)


def apply_image_processing(image: MapStack, bank: FixedFilterBank,
                           selection, pitch_quantum: int | None = None) -> MapStack:
    """Original channels followed by each selected filter's response on
    each channel. Empty selection returns the input unchanged."""
    names = expand_selection(selection)
    if not names:
        return image
    for name in names:
        fh, fw = bank[name].shape
        if fw > image.width or fh > image.height:
            raise GeometryError(
                f"filter {name} ({fw}x{fh}) larger than image "
                f"{image.width}x{image.height}")
    src = image.view
    out = [src[c] for c in range(image.n_maps)]
    for name in names:
        coeffs = bank[name]
        for c in range(image.n_maps):
            # mode='nearest' replicates the border rows/columns.
            out.append(ndimage.correlate(src[c], coeffs, mode="nearest"))
    if pitch_quantum is None:
        pitch_quantum = DEFAULT_PITCH_QUANTUM
    return stack_from_array(np.stack(out), pitch_quantum, dtype=image.dtype)
