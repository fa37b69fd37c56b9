"""Distance fields and Hausdorff-type distances between grid sets.

All distances are between cell centers, in physical units.  Squared
distances are computed in whole cells, so ``dist = sqrt(k) * h`` for an
integer ``k`` and comparisons against brute force are exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .grid import GridGeometry, GridSet


@dataclass(frozen=True, eq=False)
class DistanceField:
    geometry: GridGeometry
    sq_cells: np.ndarray  # squared distance in cell units, int64

    @property
    def dist(self) -> np.ndarray:
        return np.sqrt(self.sq_cells) * self.geometry.h


def _nearest_sq(source: np.ndarray) -> np.ndarray:
    # feature transform gives the nearest source cell; the squared distance
    # is then recomputed in integers
    idx = ndimage.distance_transform_edt(~source, return_distances=False, return_indices=True)
    jj, ii = np.indices(source.shape)
    return ((idx[0] - jj).astype(np.int64) ** 2 + (idx[1] - ii).astype(np.int64) ** 2)


def distance_transform(X: GridSet) -> DistanceField:
    """Exact Euclidean distance from every cell to the nearest cell of ``X``.

    On a torus geometry the wrapped metric is used: the mask is tiled 3x3
    and the center tile of the result is kept.
    """
    if not X:
        raise ValidationError("distance to the empty set is undefined")
    geom = X.geometry
    if geom.wrap == "torus":
        ny, nx = geom.shape
        sq = _nearest_sq(np.tile(X.bits, (3, 3)))[ny : 2 * ny, nx : 2 * nx]
    else:
        sq = _nearest_sq(X.bits)
    sq = np.ascontiguousarray(sq)
    sq.setflags(write=False)
    return DistanceField(geom, sq)


def _pair(X: GridSet, Y: GridSet):
    if X.geometry != Y.geometry:
        raise ValidationError("grid sets live on different geometries")
    if not X or not Y:
        raise ValidationError("Hausdorff distances need nonempty sets")


def directed_hausdorff(X: GridSet, Y: GridSet) -> float:
    """sup over x in X of d(x, Y); zero iff X is inside Y."""
    _pair(X, Y)
    sq = distance_transform(Y).sq_cells[X.bits].max()
    return float(np.sqrt(sq) * X.geometry.h)


def hausdorff(X: GridSet, Y: GridSet) -> float:
    return max(directed_hausdorff(X, Y), directed_hausdorff(Y, X))


def epsilon_neighborhood(X: GridSet, eps: float) -> GridSet:
    """Cells whose center lies within ``eps`` of a center of ``X``."""
    if eps < 0:
        raise ValidationError(f"eps must be >= 0, got {eps}")
    return GridSet(X.geometry, distance_transform(X).dist <= eps)
