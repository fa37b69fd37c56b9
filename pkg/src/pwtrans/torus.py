"""Double rotations of the unit 2-torus and the lattice projection.

A double rotation moves points of a region R by ``v0`` and everything
else by ``v1`` (mod 1).  For a planar map with m = d + 1 branches, the
differences ``v_i - v_0`` span a lattice; projecting onto the quotient
torus turns the whole map into one rotation by ``v_0``.
``check_projection_lemma`` measures how far the grid engine is from
that identity.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import SpecError, ValidationError
from .grid import (
    GridBranch, GridGeometry, GridSet, PwtSpec, apply_grid, snap_vector, unit_torus,
)
from .metrics import hausdorff
from .regions import Complement, Rect, Region, region_from_dict

UNIT_SQUARE = Rect((0.0, 0.0), (1.0, 1.0))


@dataclass(frozen=True, eq=False)
class TorusSpec:
    region: Region
    v0: tuple[float, float]
    v1: tuple[float, float]
    geometry: GridGeometry
    pwt: PwtSpec = field(init=False, repr=False)

    def __post_init__(self):
        g = self.geometry
        if g.wrap != "torus":
            raise SpecError("a double rotation needs a torus geometry")
        if not (math.isclose(g.nx * g.h, 1.0) and math.isclose(g.ny * g.h, 1.0)):
            raise SpecError("torus geometry must have period 1 in both axes")
        if g.origin != (0.0, 0.0):
            raise SpecError("torus geometry must have origin (0, 0)")
        branches = (
            GridBranch(self.region, self.v0),
            GridBranch(Complement(self.region, UNIT_SQUARE), self.v1),
        )
        object.__setattr__(self, "pwt", PwtSpec(UNIT_SQUARE, branches, g))
        object.__setattr__(self, "v0", self.pwt.branches[0].vector)
        object.__setattr__(self, "v1", self.pwt.branches[1].vector)

    @property
    def region_mask(self) -> GridSet:
        return self.pwt.branch_masks[0]

    def with_vectors(self, v0, v1) -> "TorusSpec":
        return TorusSpec(self.region, v0, v1, self.geometry)

    @classmethod
    def from_dict(cls, d: dict) -> "TorusSpec":
        try:
            branches = d["branches"]
            if len(branches) != 2:
                raise SpecError("a torus spec has exactly two branches (R and its complement)")
            region = region_from_dict(branches[0]["region"])
            v0, v1 = tuple(branches[0]["vector"]), tuple(branches[1]["vector"])
            grid = dict(d["grid"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed torus spec: {exc}") from exc
        grid["wrap"] = "torus"
        return cls(region, v0, v1, GridGeometry.from_dict(grid))

    def to_dict(self) -> dict:
        d = self.pwt.to_dict()
        d["branches"][1]["region"] = {"type": "complement", "region": self.region.to_dict(),
                                      "outer": UNIT_SQUARE.to_dict()}
        return d


def load_torus_spec(path) -> TorusSpec:
    with open(path) as fh:
        return TorusSpec.from_dict(json.load(fh))


def double_rotation_apply(spec: TorusSpec, K: GridSet) -> GridSet:
    return apply_grid(spec.pwt, K)


def lost_region(spec: TorusSpec, K: GridSet) -> GridSet:
    """Cells of K that are not hit by the image of K."""
    return K - double_rotation_apply(spec, K)


@dataclass(frozen=True, eq=False)
class LatticeBasis:
    """Lattice spanned by the columns ``v_i - v_0`` and the rotation ``v_0``."""

    base_vector: np.ndarray
    basis: np.ndarray
    inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        base = np.asarray(self.base_vector, dtype=float)
        B = np.asarray(self.basis, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] != base.shape[0]:
            raise ValidationError(f"basis must be d x d, got shape {B.shape}")
        scale = max(1.0, float(np.abs(B).max()))
        if abs(np.linalg.det(B)) <= 1e-12 * scale ** B.shape[0]:
            raise ValidationError("lattice basis is singular")
        object.__setattr__(self, "base_vector", base)
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "inverse", np.linalg.inv(B))

    @classmethod
    def from_vectors(cls, vectors) -> "LatticeBasis":
        V = np.asarray(vectors, dtype=float)
        if V.shape[0] != V.shape[1] + 1:
            raise ValidationError(f"need d + 1 vectors in R^d, got {V.shape[0]} in R^{V.shape[1]}")
        return cls(V[0], (V[1:] - V[0]).T)

    def lattice_coords(self, points: np.ndarray) -> np.ndarray:
        """Rows of ``points`` in basis coordinates."""
        return points @ self.inverse.T


def project_to_torus(K: GridSet, L: LatticeBasis, torus: GridGeometry) -> GridSet:
    """Image of the cell centers of K in R^2 / L, rasterized on ``torus``.

    The quotient is identified with ``[0, 1)^2`` through basis coordinates;
    ``torus`` must be a unit-period torus grid.
    """
    if torus.wrap != "torus":
        raise ValidationError("projection target must be a torus geometry")
    x, y = K.geometry.centers()
    pts = np.column_stack([x[K.bits], y[K.bits]])
    u = L.lattice_coords(pts)
    u = u - np.floor(u)
    i = np.floor(u[:, 0] * torus.nx).astype(np.int64) % torus.nx
    j = np.floor(u[:, 1] * torus.ny).astype(np.int64) % torus.ny
    bits = np.zeros(torus.shape, dtype=bool)
    bits[j, i] = True
    return GridSet(torus, bits)


def lattice_of(spec: PwtSpec) -> LatticeBasis:
    """Lattice built from the *snapped* vectors the grid engine really uses."""
    return LatticeBasis.from_vectors(spec.snapped_vectors)


def check_projection_lemma(
    spec: PwtSpec, K: GridSet, L: LatticeBasis | None = None, torus: GridGeometry | None = None
) -> float:
    """Hausdorff gap between pi(F(K)) and R(pi(K)) on the quotient torus.

    In the continuum the two sets coincide; on the grid the gap is at most
    one torus cell diagonal.
    """
    d = 2
    if spec.m != d + 1:
        raise ValidationError(f"the projection identity needs m = d + 1 = 3 branches, got {spec.m}")
    L = lattice_of(spec) if L is None else L
    torus = unit_torus(128) if torus is None else torus
    lhs = project_to_torus(apply_grid(spec, K), L, torus)
    offset, _ = snap_vector(L.inverse @ L.base_vector, torus)
    rhs = project_to_torus(K, L, torus).shifted(offset)
    return hausdorff(lhs, rhs)


def rational_dependence_check(vectors) -> tuple[int, ...] | None:
    """Integer relation ``sum c_i v_i = 0`` among rational vectors, or None.

    The relation is primitive with its first nonzero entry positive.
    """
    cols = [[Fraction(c) for c in v] for v in vectors]
    m = len(cols)
    if m == 0:
        return None
    d = len(cols[0])
    A = [[cols[k][r] for k in range(m)] for r in range(d)]
    pivots: list[int] = []
    row = 0
    for col in range(m):
        piv = next((r for r in range(row, d) if A[r][col] != 0), None)
        if piv is None:
            continue
        A[row], A[piv] = A[piv], A[row]
        p = A[row][col]
        A[row] = [a / p for a in A[row]]
        for r in range(d):
            if r != row and A[r][col] != 0:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[row])]
        pivots.append(col)
        row += 1
        if row == d:
            break
    free = next((c for c in range(m) if c not in pivots), None)
    if free is None:
        return None
    coeffs = [Fraction(0)] * m
    coeffs[free] = Fraction(1)
    for r, pc in enumerate(pivots):
        coeffs[pc] = -A[r][free]
    den = math.lcm(*(c.denominator for c in coeffs))
    ints = [int(c * den) for c in coeffs]
    g = math.gcd(*ints)
    ints = [c // g for c in ints]
    if next(c for c in ints if c != 0) < 0:
        ints = [-c for c in ints]
    return tuple(ints)
