"""Finite-resolution engine for planar piecewise translations.

Sets are boolean masks over a regular grid of square cells.  Translation
vectors are snapped to whole-cell offsets, which turns the map into a
genuine piecewise translation of a finite set: orbits from the full
domain are monotone, stabilize in finitely many steps, and the
stabilized mask is invariant bit for bit.

Masks are stored as ``bits[j, i]`` with shape ``(ny, nx)``; ``j`` grows
with ``y``.  File formats flip rows so that row 0 is the top.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantError, SpecError, ValidationError
from .regions import Region, region_from_dict

DEFAULT_CAP = 100_000
DEFAULT_RESOLUTION = 512


@dataclass(frozen=True)
class GridGeometry:
    """Cell (i, j) has center ``origin + ((i + 1/2) h, (j + 1/2) h)``."""

    nx: int
    ny: int
    h: float
    origin: tuple[float, float] = (0.0, 0.0)
    wrap: str = "none"

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))
        object.__setattr__(self, "h", float(self.h))
        if self.nx < 1 or self.ny < 1:
            raise ValidationError(f"grid must be at least 1x1, got {self.nx}x{self.ny}")
        if not self.h > 0:
            raise ValidationError(f"cell size must be positive, got {self.h}")
        if self.wrap not in ("none", "torus"):
            raise ValidationError(f"wrap must be 'none' or 'torus', got {self.wrap!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def periods(self) -> tuple[float, float]:
        return (self.nx * self.h, self.ny * self.h)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        xs = self.origin[0] + (np.arange(self.nx) + 0.5) * self.h
        ys = self.origin[1] + (np.arange(self.ny) + 0.5) * self.h
        return np.meshgrid(xs, ys)

    def rescaled(self, h: float) -> "GridGeometry":
        """Same physical extent at cell size ``h``.

        Single-row grids (1-D maps embedded in the plane) keep one row and
        keep its center line fixed.
        """
        nx = max(1, round(self.nx * self.h / h))
        if self.ny == 1:
            yc = self.origin[1] + self.h / 2
            return GridGeometry(nx, 1, h, (self.origin[0], yc - h / 2), self.wrap)
        ny = max(1, round(self.ny * self.h / h))
        return GridGeometry(nx, ny, h, self.origin, self.wrap)

    @classmethod
    def from_dict(cls, d: dict) -> "GridGeometry":
        try:
            return cls(
                int(d["nx"]), int(d["ny"]), float(d["h"]),
                tuple(d.get("origin", (0.0, 0.0))), d.get("wrap", "none"),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed grid {d!r}: {exc}") from exc

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "h": self.h, "origin": list(self.origin), "wrap": self.wrap}


def unit_torus(n: int) -> GridGeometry:
    return GridGeometry(n, n, 1.0 / n, (0.0, 0.0), "torus")


@dataclass(frozen=True, eq=False)
class GridSet:
    """Immutable boolean mask bound to a geometry."""

    geometry: GridGeometry
    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool)
        if bits.shape != self.geometry.shape:
            raise ValidationError(f"mask shape {bits.shape} does not match grid {self.geometry.shape}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def empty(cls, geom: GridGeometry) -> "GridSet":
        return cls(geom, np.zeros(geom.shape, dtype=bool))

    @classmethod
    def full(cls, geom: GridGeometry) -> "GridSet":
        return cls(geom, np.ones(geom.shape, dtype=bool))

    def _check(self, other: "GridSet"):
        if other.geometry != self.geometry:
            raise ValidationError("grid sets live on different geometries")

    def __eq__(self, other):
        if not isinstance(other, GridSet):
            return NotImplemented
        return self.geometry == other.geometry and np.array_equal(self.bits, other.bits)

    __hash__ = None

    def __or__(self, other):
        self._check(other)
        return GridSet(self.geometry, self.bits | other.bits)

    def __and__(self, other):
        self._check(other)
        return GridSet(self.geometry, self.bits & other.bits)

    def __sub__(self, other):
        self._check(other)
        return GridSet(self.geometry, self.bits & ~other.bits)

    def __le__(self, other):
        self._check(other)
        return not (self.bits & ~other.bits).any()

    def issubset(self, other) -> bool:
        return self <= other

    def complement(self) -> "GridSet":
        return GridSet(self.geometry, ~self.bits)

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    def __bool__(self):
        return bool(self.bits.any())

    def shifted(self, offset: tuple[int, int]) -> "GridSet":
        return GridSet(self.geometry, shift_mask(self.bits, offset, self.geometry.wrap))


def shift_mask(bits: np.ndarray, offset: tuple[int, int], wrap: str) -> np.ndarray:
    """Move every set cell by ``offset = (di, dj)`` cells.

    With ``wrap="none"`` cells pushed off the grid are dropped.
    """
    di, dj = int(offset[0]), int(offset[1])
    if wrap == "torus":
        return np.roll(bits, (dj, di), axis=(0, 1))
    ny, nx = bits.shape
    out = np.zeros_like(bits)
    if abs(di) >= nx or abs(dj) >= ny:
        return out
    src_j = slice(max(0, -dj), ny - max(0, dj))
    dst_j = slice(max(0, dj), ny - max(0, -dj))
    src_i = slice(max(0, -di), nx - max(0, di))
    dst_i = slice(max(0, di), nx - max(0, -di))
    out[dst_j, dst_i] = bits[src_j, src_i]
    return out


def rasterize(region: Region, geom: GridGeometry) -> GridSet:
    x, y = geom.centers()
    return GridSet(geom, region.contains(x, y))


def snap_vector(v, geom: GridGeometry) -> tuple[tuple[int, int], tuple[float, float]]:
    """Round ``v`` to whole cells (ties toward +inf); return offset and residual."""
    offset = tuple(int(math.floor(c / geom.h + 0.5)) for c in v)
    residual = tuple(float(c) - k * geom.h for c, k in zip(v, offset))
    return offset, residual


@dataclass(frozen=True)
class GridBranch:
    region: Region
    vector: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "vector", tuple(float(c) for c in self.vector))
        if len(self.vector) != 2:
            raise ValidationError(f"vectors must be 2-D, got {self.vector}")


@dataclass(frozen=True, eq=False)
class PwtSpec:
    """A planar piecewise translation at a fixed grid resolution.

    Construction rasterizes omega and the branches, snaps the vectors and
    validates the cover and (without wrap) the self-mapping property.
    """

    omega: Region
    branches: tuple[GridBranch, ...]
    geometry: GridGeometry
    omega_mask: GridSet = field(init=False, repr=False)
    branch_masks: tuple[GridSet, ...] = field(init=False, repr=False)
    offsets: tuple[tuple[int, int], ...] = field(init=False, repr=False)
    residuals: tuple[tuple[float, float], ...] = field(init=False, repr=False)

    def __post_init__(self):
        branches = tuple(self.branches)
        if not branches:
            raise SpecError("at least one branch is required")
        object.__setattr__(self, "branches", branches)
        geom = self.geometry
        om = rasterize(self.omega, geom)
        masks = tuple(rasterize(b.region, geom) & om for b in branches)
        snaps = [snap_vector(b.vector, geom) for b in branches]
        object.__setattr__(self, "omega_mask", om)
        object.__setattr__(self, "branch_masks", masks)
        object.__setattr__(self, "offsets", tuple(s[0] for s in snaps))
        object.__setattr__(self, "residuals", tuple(s[1] for s in snaps))

        covered = np.zeros(geom.shape, dtype=bool)
        for m in masks:
            covered |= m.bits
        if (om.bits & ~covered).any():
            raise SpecError("branch regions do not cover the rasterized domain")
        if geom.wrap == "none":
            for k, (m, off) in enumerate(zip(masks, self.offsets)):
                moved = shift_mask(m.bits, off, "none")
                if moved.sum() != m.count or (moved & ~om.bits).any():
                    raise SpecError(f"branch {k}: snapped image by offset {off} leaves the domain")

    @property
    def m(self) -> int:
        return len(self.branches)

    @property
    def vectors(self) -> tuple[tuple[float, float], ...]:
        return tuple(b.vector for b in self.branches)

    @property
    def snapped_vectors(self) -> tuple[tuple[float, float], ...]:
        h = self.geometry.h
        return tuple((oi * h, oj * h) for oi, oj in self.offsets)

    def with_vectors(self, vectors) -> "PwtSpec":
        branches = tuple(GridBranch(b.region, v) for b, v in zip(self.branches, vectors))
        return PwtSpec(self.omega, branches, self.geometry)

    def with_geometry(self, geom: GridGeometry) -> "PwtSpec":
        return PwtSpec(self.omega, self.branches, geom)

    @classmethod
    def from_dict(cls, d: dict) -> "PwtSpec":
        try:
            omega = region_from_dict(d["omega"])
            branches = tuple(
                GridBranch(region_from_dict(b["region"]), tuple(b["vector"])) for b in d["branches"]
            )
            geom = GridGeometry.from_dict(d["grid"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed grid spec: {exc}") from exc
        return cls(omega, branches, geom)

    def to_dict(self) -> dict:
        return {
            "omega": self.omega.to_dict(),
            "branches": [{"region": b.region.to_dict(), "vector": list(b.vector)} for b in self.branches],
            "grid": self.geometry.to_dict(),
        }


def load_pwt_spec(path) -> PwtSpec:
    with open(path) as fh:
        return PwtSpec.from_dict(json.load(fh))


def _apply_bits(spec: PwtSpec, bits: np.ndarray) -> np.ndarray:
    wrap = spec.geometry.wrap
    out = np.zeros_like(bits)
    for m, off in zip(spec.branch_masks, spec.offsets):
        out |= shift_mask(bits & m.bits, off, wrap)
    return out


def apply_grid(spec: PwtSpec, K: GridSet) -> GridSet:
    """F(K): union of the branch pieces of K, each moved by its snapped offset."""
    if K.geometry != spec.geometry:
        raise ValidationError("set geometry does not match the spec geometry")
    return GridSet(spec.geometry, _apply_bits(spec, K.bits))


@dataclass(frozen=True, eq=False)
class AttractorResult2:
    """``status`` is ``"stabilized"`` (``steps`` = N, F(A) = A) or
    ``"cap_reached"`` (``steps`` = cap, ``attractor`` = last iterate).
    ``area_trace[n]`` is the cell count of F^n(omega)."""

    status: str
    steps: int
    attractor: GridSet
    area_trace: tuple[int, ...]

    @property
    def stabilized(self) -> bool:
        return self.status == "stabilized"


def iterate_grid(spec: PwtSpec, n: int, K: GridSet | None = None) -> list[GridSet]:
    """[K, F(K), ..., F^n(K)], K defaulting to the domain."""
    K = spec.omega_mask if K is None else K
    out = [K]
    for _ in range(n):
        out.append(apply_grid(spec, out[-1]))
    return out


def attractor_grid(spec: PwtSpec, cap: int = DEFAULT_CAP) -> AttractorResult2:
    if cap < 1:
        raise ValidationError(f"cap must be >= 1, got {cap}")
    K = spec.omega_mask.bits
    trace = [int(K.sum())]
    for n in range(cap):
        nxt = _apply_bits(spec, K)
        if np.array_equal(nxt, K):
            return AttractorResult2("stabilized", n, GridSet(spec.geometry, K), tuple(trace))
        if (nxt & ~K).any():
            raise InvariantError(f"grid orbit not monotone at step {n + 1}")
        K = nxt
        trace.append(int(K.sum()))
    return AttractorResult2("cap_reached", cap, GridSet(spec.geometry, K), tuple(trace))
