"""Planar region descriptions and their center-sampled rasterization.

A region answers ``contains(x, y)`` for arrays of points.  Membership is
closed: points exactly on the boundary are inside.  ``Complement`` is
the one exception by construction (it is the set difference
``outer - region``), which makes a region and its complement partition
any raster.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


class Region:
    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Rect(Region):
    lo: tuple[float, float]
    hi: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(c) for c in self.lo))
        object.__setattr__(self, "hi", tuple(float(c) for c in self.hi))
        if not (self.lo[0] < self.hi[0] and self.lo[1] < self.hi[1]):
            raise ValidationError(f"rect needs lo < hi componentwise, got {self.lo}, {self.hi}")

    def contains(self, x, y):
        return (x >= self.lo[0]) & (x <= self.hi[0]) & (y >= self.lo[1]) & (y <= self.hi[1])

    def to_dict(self):
        return {"type": "rect", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class Disk(Region):
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValidationError(f"disk radius must be positive, got {self.radius}")

    def contains(self, x, y):
        cx, cy = self.center
        return (x - cx) ** 2 + (y - cy) ** 2 <= self.radius**2

    def to_dict(self):
        return {"type": "disk", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class ConvexPolygon(Region):
    """Convex polygon with counter-clockwise vertices."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = tuple((float(a), float(b)) for a, b in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise ValidationError("polygon needs at least 3 vertices")
        n = len(verts)
        for k in range(n):
            (ax, ay), (bx, by), (cx, cy) = verts[k], verts[(k + 1) % n], verts[(k + 2) % n]
            if (bx - ax) * (cy - by) - (by - ay) * (cx - bx) <= 0:
                raise ValidationError("polygon must be strictly convex and counter-clockwise")

    def contains(self, x, y):
        inside = np.ones(np.broadcast(x, y).shape, dtype=bool)
        n = len(self.vertices)
        for k in range(n):
            (ax, ay), (bx, by) = self.vertices[k], self.vertices[(k + 1) % n]
            inside &= (bx - ax) * (y - ay) - (by - ay) * (x - ax) >= 0
        return inside

    def to_dict(self):
        return {"type": "polygon", "vertices": [list(v) for v in self.vertices]}


@dataclass(frozen=True)
class Complement(Region):
    """Points of ``outer`` that are not in ``region``."""

    region: Region
    outer: Region

    def contains(self, x, y):
        return self.outer.contains(x, y) & ~self.region.contains(x, y)

    def to_dict(self):
        return {"type": "complement", "region": self.region.to_dict(), "outer": self.outer.to_dict()}


@dataclass(frozen=True)
class Union(Region):
    parts: tuple[Region, ...]

    def contains(self, x, y):
        out = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for p in self.parts:
            out |= p.contains(x, y)
        return out

    def to_dict(self):
        return {"type": "union", "parts": [p.to_dict() for p in self.parts]}


@dataclass(frozen=True)
class Intersection(Region):
    parts: tuple[Region, ...]

    def __post_init__(self):
        if not self.parts:
            raise ValidationError("intersection of no regions is undefined")

    def contains(self, x, y):
        out = np.ones(np.broadcast(x, y).shape, dtype=bool)
        for p in self.parts:
            out &= p.contains(x, y)
        return out

    def to_dict(self):
        return {"type": "intersection", "parts": [p.to_dict() for p in self.parts]}


@dataclass(frozen=True)
class Empty(Region):
    def contains(self, x, y):
        return np.zeros(np.broadcast(x, y).shape, dtype=bool)

    def to_dict(self):
        return {"type": "empty"}


def region_from_dict(d: dict) -> Region:
    try:
        kind = d["type"]
        if kind == "rect":
            return Rect(tuple(d["lo"]), tuple(d["hi"]))
        if kind == "disk":
            return Disk(tuple(d["center"]), d["radius"])
        if kind == "polygon":
            return ConvexPolygon(tuple(tuple(v) for v in d["vertices"]))
        if kind == "complement":
            return Complement(region_from_dict(d["region"]), region_from_dict(d["outer"]))
        if kind == "union":
            return Union(tuple(region_from_dict(p) for p in d["parts"]))
        if kind == "intersection":
            return Intersection(tuple(region_from_dict(p) for p in d["parts"]))
        if kind == "empty":
            return Empty()
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed region {d!r}: {exc}") from exc
    raise ValidationError(f"unknown region type {kind!r}")


def sector(center, radius, start_angle, stop_angle) -> Intersection:
    """Closed circular sector, angles in radians with stop - start < pi."""
    cx, cy = center
    span = stop_angle - start_angle
    if not 0 < span < np.pi:
        raise ValidationError("sector span must be in (0, pi)")
    R = 3 * radius / np.cos(span / 4)
    angles = [start_angle, start_angle + span / 2, stop_angle]
    verts = [(cx, cy)] + [(cx + R * np.cos(a), cy + R * np.sin(a)) for a in angles]
    return Intersection((Disk(center, radius), ConvexPolygon(tuple(verts))))
