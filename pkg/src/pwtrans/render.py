"""Binary PGM/PPM encoding and figure layering.

PGM masks: ``P5``, maxval 255, 255 = set.  PPM renders: ``P6``.  Row 0
of the file is the top of the picture, i.e. the largest ``j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .grid import GridGeometry, GridSet

WHITE = (255, 255, 255)
BLACK = (0, 0, 0)
BLUE = (0, 0, 255)
RED = (220, 0, 0)
GREEN = (0, 170, 0)
GREY = (200, 200, 200)


def write_pgm(K: GridSet) -> bytes:
    ny, nx = K.geometry.shape
    body = np.where(K.bits[::-1], 255, 0).astype(np.uint8)
    return f"P5\n{nx} {ny}\n255\n".encode() + body.tobytes()


def _parse_header(data: bytes, magic: bytes):
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValidationError("truncated image header")
        tokens.append(data[start:pos])
    if tokens[0] != magic:
        raise ValidationError(f"expected {magic.decode()} image, got {tokens[0]!r}")
    nx, ny, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValidationError(f"only maxval 255 is supported, got {maxval}")
    return nx, ny, pos + 1


def read_pgm(data: bytes, geometry: GridGeometry | None = None) -> GridSet:
    """Decode a P5 mask; any nonzero byte counts as set.

    Without ``geometry`` the mask is placed on the unit square with
    ``h = 1/nx`` and no wrap.
    """
    nx, ny, off = _parse_header(data, b"P5")
    if len(data) - off < nx * ny:
        raise ValidationError("truncated PGM body")
    body = np.frombuffer(data, dtype=np.uint8, count=nx * ny, offset=off)
    if geometry is None:
        geometry = GridGeometry(nx, ny, 1.0 / nx)
    elif geometry.shape != (ny, nx):
        raise ValidationError(f"PGM is {nx}x{ny} but geometry is {geometry.nx}x{geometry.ny}")
    return GridSet(geometry, body.reshape(ny, nx)[::-1] != 0)


def write_ppm(rgb: np.ndarray) -> bytes:
    """``rgb`` is (rows, cols, 3) uint8 in file order (row 0 = top)."""
    rows, cols, _ = rgb.shape
    return f"P6\n{cols} {rows}\n255\n".encode() + np.ascontiguousarray(rgb, dtype=np.uint8).tobytes()


def read_ppm(data: bytes) -> np.ndarray:
    nx, ny, off = _parse_header(data, b"P6")
    if len(data) - off < nx * ny * 3:
        raise ValidationError("truncated PPM body")
    body = np.frombuffer(data, dtype=np.uint8, count=nx * ny * 3, offset=off)
    return body.reshape(ny, nx, 3)


@dataclass
class RenderLayers:
    """Masks painted in order over a background; later layers win."""

    layers: list = field(default_factory=list)  # [(GridSet, (r, g, b))]
    background: tuple = WHITE

    def add(self, K: GridSet, color) -> "RenderLayers":
        self.layers.append((K, tuple(color)))
        return self

    def to_rgb(self) -> np.ndarray:
        if not self.layers:
            raise ValidationError("nothing to render")
        geom = self.layers[0][0].geometry
        rgb = np.empty(geom.shape + (3,), dtype=np.uint8)
        rgb[...] = self.background
        for K, color in self.layers:
            if K.geometry != geom:
                raise ValidationError("all layers must share one geometry")
            rgb[K.bits] = color
        return rgb[::-1]


def render_ppm(layers: RenderLayers) -> bytes:
    return write_ppm(layers.to_rgb())


def montage(panels: list[np.ndarray], gap: int = 4, gap_color=GREY) -> np.ndarray:
    """Panels side by side, separated by ``gap`` columns."""
    rows = max(p.shape[0] for p in panels)
    cols = sum(p.shape[1] for p in panels) + gap * (len(panels) - 1)
    out = np.empty((rows, cols, 3), dtype=np.uint8)
    out[...] = gap_color
    x = 0
    for p in panels:
        out[: p.shape[0], x : x + p.shape[1]] = p
        x += p.shape[1] + gap
    return out


def orbit_panel(current: GridSet, previous: GridSet | None, region: GridSet | None = None) -> RenderLayers:
    """One snapshot of a double-rotation orbit.

    Blue is the current iterate, red the cells lost in the last step,
    green the region R (only drawn when given, i.e. on the first panel).
    """
    layers = RenderLayers().add(current, BLUE)
    if previous is not None:
        layers.add(previous - current, RED)
    if region is not None:
        layers.add(region & current, GREEN)
    return layers
