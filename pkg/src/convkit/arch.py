"""Architecture description parser.

Grammar (stanzas separated by newlines or semicolons, '#' starts a comment):

    input <channels>x<W>x<H>
    imgproc <filter>[,<filter>...]      filter: sobel | scharr | hat<N> (N odd)
    conv <M>M k<Kx>x<Ky> s<Sx>x<Sy> [rand<in_degree>]
    maxpool <Kx>x<Ky>
    fc <N>N
    output <classes>

Lines containing '=' are key=value configuration entries (learning rate,
deformation settings, ...) and are collected separately so one file can
describe a whole experiment.
"""

from __future__ import annotations

import re
import warnings

from .errors import ConfigError, GeometryError, GeometryWarning
from .topology import LayerSpec, NetworkSpec, output_map_size

_INT = r"(\d+)"
_STANZA_RES = {
    "input": re.compile(rf"^input\s+{_INT}x{_INT}x{_INT}$"),
    "imgproc": re.compile(r"^imgproc\s+(\S+)$"),
    "conv": re.compile(
        rf"^conv\s+{_INT}M\s+k{_INT}x{_INT}\s+s{_INT}x{_INT}(?:\s+rand{_INT})?$"),
    "maxpool": re.compile(rf"^maxpool\s+{_INT}x{_INT}$"),
    "fc": re.compile(rf"^fc\s+{_INT}N$"),
    "output": re.compile(rf"^output\s+{_INT}$"),
}
_FILTER_RE = re.compile(r"^(sobel|scharr|hat(\d+))$")


def _syntax_error(line_no: int, stanza: str, why: str) -> ConfigError:
    return ConfigError(f"line {line_no}: {why} in stanza {stanza!r}")


def _split_stanzas(text: str):
    """Yield (line_no, stanza_text) with comments stripped."""
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        for part in line.split(";"):
            part = part.strip()
            if part:
                yield line_no, part


def _parse_stanza(line_no: int, stanza: str) -> LayerSpec:
    word = stanza.split(None, 1)[0]
    pattern = _STANZA_RES.get(word)
    if pattern is None:
        raise _syntax_error(line_no, stanza, f"unknown layer kind {word!r}")
    m = pattern.match(stanza)
    if m is None:
        raise _syntax_error(line_no, stanza, "malformed stanza")
    g = m.groups()
    if word == "input":
        return LayerSpec(kind="input", maps=int(g[0]),
                         out_maps=int(g[0]), out_width=int(g[1]), out_height=int(g[2]))
    if word == "imgproc":
        names = tuple(g[0].split(","))
        for name in names:
            fm = _FILTER_RE.match(name)
            if fm is None:
                raise _syntax_error(line_no, stanza, f"unknown filter {name!r}")
            if fm.group(2) is not None and int(fm.group(2)) % 2 == 0:
                raise _syntax_error(line_no, stanza, f"hat size {fm.group(2)} must be odd")
        return LayerSpec(kind="image_processing", filters=names)
    if word == "conv":
        maps, kx, ky, sx, sy = map(int, g[:5])
        spec = LayerSpec(kind="convolutional", maps=maps,
                         kernel=(kx, ky), skip=(sx, sy))
        if g[5] is not None:
            spec.connectivity = "random"
            spec.in_degree = int(g[5])
        return spec
    if word == "maxpool":
        return LayerSpec(kind="max_pooling", pool=(int(g[0]), int(g[1])))
    if word == "fc":
        return LayerSpec(kind="fully_connected", neurons=int(g[0]))
    return LayerSpec(kind="output", neurons=int(g[0]))


def resolve_geometry(layers: list[LayerSpec]) -> NetworkSpec:
    """Run the placement arithmetic down the stack and validate every step."""
    if not layers or layers[0].kind != "input":
        raise ConfigError("architecture must start with an input stanza")
    if sum(1 for l in layers if l.kind == "input") > 1:
        raise ConfigError("only one input stanza is allowed")
    if layers[-1].kind != "output":
        raise ConfigError("architecture must end with an output stanza")

    first = layers[0]
    if min(first.maps, first.out_width, first.out_height) < 1:
        raise GeometryError("layer 0: input geometry must be >= 1 in every dimension")

    prev = first
    seen_fc = False
    for idx, spec in enumerate(layers[1:], start=1):
        if spec.kind == "image_processing":
            if idx != 1:
                raise ConfigError(
                    f"layer {idx}: imgproc must come immediately after input")
            largest = max((int(n[3:]) if n.startswith("hat") else 3)
                          for n in spec.filters)
            if largest > min(prev.out_width, prev.out_height):
                raise GeometryError(
                    f"layer {idx}: filter size {largest} exceeds input "
                    f"{prev.out_width}x{prev.out_height}")
            spec.out_maps = prev.out_maps * (1 + 2 * len(spec.filters))
            spec.out_width, spec.out_height = prev.out_width, prev.out_height
        elif spec.kind == "convolutional":
            if seen_fc:
                raise ConfigError(f"layer {idx}: conv cannot follow a fully connected layer")
            kx, ky = spec.kernel
            sx, sy = spec.skip
            try:
                spec.out_width = output_map_size(prev.out_width, kx, sx)
                spec.out_height = output_map_size(prev.out_height, ky, sy)
            except GeometryError as e:
                raise GeometryError(f"layer {idx}: {e}") from None
            if (prev.out_width - kx) % (sx + 1) or (prev.out_height - ky) % (sy + 1):
                warnings.warn(
                    f"layer {idx}: kernel placements do not cover the input exactly",
                    GeometryWarning, stacklevel=2)
            spec.out_maps = spec.maps
            if spec.connectivity == "random":
                if not 1 <= spec.in_degree <= prev.out_maps:
                    raise ConfigError(
                        f"layer {idx}: rand{spec.in_degree} outside [1, {prev.out_maps}]")
                if spec.in_degree * spec.maps < prev.out_maps:
                    raise ConfigError(
                        f"layer {idx}: rand{spec.in_degree} cannot cover "
                        f"{prev.out_maps} source maps")
        elif spec.kind == "max_pooling":
            if seen_fc:
                raise ConfigError(f"layer {idx}: maxpool cannot follow a fully connected layer")
            px, py = spec.pool
            if px < 1 or py < 1:
                raise GeometryError(f"layer {idx}: pool region must be >= 1")
            if px > prev.out_width or py > prev.out_height:
                raise GeometryError(
                    f"layer {idx}: pool {px}x{py} larger than map "
                    f"{prev.out_width}x{prev.out_height}")
            if prev.out_width % px or prev.out_height % py:
                warnings.warn(
                    f"layer {idx}: pool {px}x{py} truncates map "
                    f"{prev.out_width}x{prev.out_height}",
                    GeometryWarning, stacklevel=2)
            spec.out_width = prev.out_width // px
            spec.out_height = prev.out_height // py
            spec.out_maps = prev.out_maps
        elif spec.kind in ("fully_connected", "output"):
            if spec.kind == "output" and idx != len(layers) - 1:
                raise ConfigError(f"layer {idx}: output must be the last stanza")
            if spec.neurons < 1:
                raise GeometryError(f"layer {idx}: neuron count must be >= 1")
            seen_fc = True
            spec.out_maps = spec.neurons
            spec.out_width = spec.out_height = 1
        else:
            raise ConfigError(f"layer {idx}: unexpected stanza kind {spec.kind!r}")
        if min(spec.out_maps, spec.out_width, spec.out_height) < 1:
            raise GeometryError(f"layer {idx}: derived size fell below 1")
        prev = spec
    return NetworkSpec(layers=layers)


def parse_architecture(text: str) -> NetworkSpec:
    """Parse stanzas and resolve all sizes; config lines are rejected here."""
    spec, config = parse_experiment(text)
    if config:
        raise ConfigError(f"unexpected key=value entries: {sorted(config)}")
    return spec


def parse_experiment(text: str) -> tuple[NetworkSpec, dict[str, str]]:
    """Parse a file mixing architecture stanzas with key=value settings."""
    layers = []
    config: dict[str, str] = {}
    for line_no, stanza in _split_stanzas(text):
        if "=" in stanza:
            key, _, value = stanza.partition("=")
            config[key.strip()] = value.strip()
            continue
        layers.append(_parse_stanza(line_no, stanza))
    return resolve_geometry(layers), config
