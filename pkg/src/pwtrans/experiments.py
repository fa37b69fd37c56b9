"""Experiment drivers: convergence curves, sweeps, probes, scaling.

Every driver is deterministic given its inputs (including the seed).
Wall-clock timings go to the run manifest; they only enter CSV output
when explicitly requested, so that CSV files are byte-reproducible.
"""
from __future__ import annotations

import hashlib
import io
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NotFiniteError, SpecError, ValidationError
from .exact import Branch1, Interval1, IntervalUnion, ItmSpec
from .grid import (
    GridBranch, GridGeometry, GridSet, PwtSpec, attractor_grid, iterate_grid,
)
from .metrics import directed_hausdorff, distance_transform, epsilon_neighborhood
from .regions import Disk, Rect, sector
from .torus import TorusSpec

ENGINE_VERSION = f"pwtrans {__version__}"


# -- spec generators --------------------------------------------------------

def random_rational(rng, lo, hi, max_den=64, dyadic=False) -> Fraction:
    """Uniformly chosen denominator, then numerator, inside [lo, hi]."""
    lo, hi = Fraction(lo), Fraction(hi)
    dens = [1 << k for k in range(max_den.bit_length()) if 1 << k <= max_den] if dyadic \
        else list(range(1, max_den + 1))
    while True:
        q = dens[int(rng.integers(len(dens)))]
        a, b = math.ceil(lo * q), math.floor(hi * q)
        if a <= b:
            return Fraction(int(rng.integers(a, b + 1)), q)


def random_itm2(rng, max_den=64, dyadic=False) -> ItmSpec:
    """Two-branch line-mode map on [0, 1] split at a random point."""
    a = random_rational(rng, Fraction(1, max_den), 1 - Fraction(1, max_den), max_den, dyadic)
    v0 = random_rational(rng, 0, 1 - a, max_den, dyadic)
    v1 = random_rational(rng, -a, 0, max_den, dyadic)
    return ItmSpec(Interval1(0, 1), (Branch1(Interval1(0, a), v0), Branch1(Interval1(a, 1), v1)))


def random_exchange(rng, max_pieces=6, max_den=64) -> ItmSpec:
    """A random interval exchange of [0, 1] (closed pieces, random permutation)."""
    k = int(rng.integers(1, max_pieces + 1))
    cuts = sorted({random_rational(rng, 0, 1, max_den) for _ in range(k - 1)} - {Fraction(0), Fraction(1)})
    bounds = [Fraction(0)] + cuts + [Fraction(1)]
    pieces = list(zip(bounds, bounds[1:]))
    order = rng.permutation(len(pieces))
    branches, pos = [], Fraction(0)
    for idx in order:
        lo, hi = pieces[idx]
        branches.append(Branch1(Interval1(lo, hi), pos - lo))
        pos += hi - lo
    return ItmSpec(Interval1(0, 1), tuple(branches))


def disk3_spec(rng, n=256, center=(0.5, 0.5), radius=0.45) -> PwtSpec:
    """Disk split into three 120-degree sectors, each pushed inward.

    Each sector moves roughly toward the center by 10-40% of the radius,
    with a small sideways component, which keeps its image in the disk.
    """
    geom = GridGeometry(n, n, 1.0 / n)
    phi = rng.uniform(0, 2 * np.pi)
    branches = []
    for k in range(3):
        a0 = phi + k * 2 * np.pi / 3
        mid = a0 + np.pi / 3
        s = rng.uniform(0.1, 0.4) * radius
        t = rng.uniform(-0.15, 0.15) * s
        v = (-s * np.cos(mid) - t * np.sin(mid), -s * np.sin(mid) + t * np.cos(mid))
        branches.append(GridBranch(sector(center, radius, a0, a0 + 2 * np.pi / 3), v))
    return PwtSpec(Disk(center, radius), tuple(branches), geom)


def random_torus_spec(rng, n=256) -> TorusSpec:
    """Double rotation with a random axis-aligned rectangle as R."""
    w, hgt = rng.uniform(0.1, 0.5, size=2)
    x0, y0 = rng.uniform(0, 1 - w), rng.uniform(0, 1 - hgt)
    region = Rect((x0, y0), (x0 + w, y0 + hgt))
    v0, v1 = rng.uniform(0, 1, size=2), rng.uniform(0, 1, size=2)
    return TorusSpec(region, tuple(v0), tuple(v1), GridGeometry(n, n, 1.0 / n, wrap="torus"))


def embed_itm(spec: ItmSpec, h: float) -> PwtSpec:
    """A line-mode 1-D map as a single-row planar grid map with cell size h."""
    if spec.mode != "line":
        raise ValidationError("only line-mode maps embed in the planar grid engine")
    n = spec.omega.length / Fraction(h)
    if n.denominator != 1:
        raise ValidationError(f"cell size {h} does not divide the domain length")
    geom = GridGeometry(int(n), 1, h, (float(spec.omega.lo), -h / 2))
    strip = lambda iv: Rect((float(iv.lo), -1.0), (float(iv.hi), 1.0))  # noqa: E731
    branches = tuple(
        GridBranch(strip(b.region), (float(b.vector), 0.0))
        for b in spec.branches if b.region.lo < b.region.hi
    )
    return PwtSpec(strip(spec.omega), branches, geom)


def exact_vs_cells_hausdorff(U: IntervalUnion, K: GridSet) -> float:
    """Hausdorff distance between an exact 1-D set and the centers of a 1-row mask."""
    g = K.geometry
    if g.ny != 1:
        raise ValidationError("expected a single-row grid")
    centers = g.origin[0] + (np.nonzero(K.bits[0])[0] + 0.5) * g.h
    if not len(centers) or not U:
        raise ValidationError("Hausdorff distance needs nonempty sets")
    lo = np.array([float(p.lo) for p in U])
    hi = np.array([float(p.hi) for p in U])

    def to_union(x):
        k = np.clip(np.searchsorted(lo, x, side="right") - 1, 0, len(lo) - 1)
        d = np.maximum(np.maximum(lo[k] - x, x - hi[k]), 0)
        k2 = np.minimum(k + 1, len(lo) - 1)
        return np.minimum(d, np.maximum(lo[k2] - x, 0) + np.maximum(x - hi[k2], 0))

    def to_centers(x):
        k = np.clip(np.searchsorted(centers, x), 1, len(centers) - 1) if len(centers) > 1 else np.zeros_like(x, dtype=int)
        d = np.abs(centers[k] - x)
        return np.minimum(d, np.abs(centers[np.maximum(k - 1, 0)] - x))

    mids = (centers[1:] + centers[:-1]) / 2
    cands = np.concatenate([lo, hi, mids[to_union(mids) == 0]])
    return float(max(to_union(centers).max(), to_centers(cands).max()))


# -- convergence ------------------------------------------------------------

@dataclass
class ConvergenceCurve:
    points: list[tuple[int, float]]
    reference_stabilized: bool
    steps: int


def convergence_curve(spec: PwtSpec, n_max: int | None = None, cap: int = 100_000) -> ConvergenceCurve:
    """d(F^n(omega), A) for n = 0..n_max, A the grid attractor.

    If the orbit hits ``cap`` the last iterate stands in for A and the
    result is flagged with ``reference_stabilized=False``.
    """
    res = attractor_grid(spec, cap)
    n_max = res.steps if n_max is None else n_max
    sq = distance_transform(res.attractor).sq_cells
    h = spec.geometry.h
    points = []
    for n, K in enumerate(iterate_grid(spec, n_max)):
        points.append((n, float(np.sqrt(sq[K.bits].max()) * h)))
    return ConvergenceCurve(points, res.stabilized, res.steps)


# -- manifests --------------------------------------------------------------

def sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class RunManifest:
    config: dict
    engine_version: str = ENGINE_VERSION
    residuals: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    outputs: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def write_outputs(out_dir, files: dict[str, bytes], manifest: RunManifest) -> Path:
    """Write ``files`` into ``out_dir`` and a manifest.json listing their digests."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, data in files.items():
        (out / name).write_bytes(data)
        manifest.outputs[name] = sha256(data)
    (out / "manifest.json").write_text(manifest.to_json() + "\n")
    return out


# -- finite-type sweep ------------------------------------------------------

COMPONENTS = ("v0x", "v0y", "v1x", "v1y")


@dataclass
class SweepConfig:
    """Parameters of a sweep over double-rotation vectors.

    ``ranges`` maps a component name (v0x, v0y, v1x, v1y) to
    ``[min, max, steps]``; unlisted components keep the base value.  With
    ``samples`` set, components are drawn uniformly from ``[min, max]``
    with ``seed`` instead of laid out on a grid.
    """

    base: dict
    mode: str = "finite_type"
    ranges: dict = field(default_factory=dict)
    samples: int | None = None
    seed: int | None = None
    cap: int = 2000
    resolutions: list = field(default_factory=lambda: [256])
    epsilon: float = 0.0
    radius: float = 0.0

    def __post_init__(self):
        if self.mode not in ("finite_type", "semicontinuity", "convergence", "resolution_scaling"):
            raise ValidationError(f"unknown sweep mode {self.mode!r}")
        for name, rng in self.ranges.items():
            if name not in COMPONENTS:
                raise ValidationError(f"unknown sweep component {name!r}")
            if len(rng) != 3 or int(rng[2]) < 1 or rng[0] > rng[1]:
                raise ValidationError(f"range for {name} must be [min, max, steps>=1], got {rng}")
        if self.samples is not None:
            if self.samples < 1:
                raise ValidationError("samples must be >= 1")
            if self.seed is None:
                raise ValidationError("random sampling requires a seed")
        if self.cap < 1:
            raise ValidationError("cap must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        try:
            return cls(**d)
        except TypeError as exc:
            raise ValidationError(f"malformed sweep config: {exc}") from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def base_spec(self) -> TorusSpec:
        spec = TorusSpec.from_dict(self.base)
        n = int(self.resolutions[0])
        if spec.geometry.nx != n:
            spec = TorusSpec(spec.region, spec.v0, spec.v1, GridGeometry(n, n, 1.0 / n, wrap="torus"))
        return spec

    def parameters(self, base: TorusSpec) -> list[tuple[float, float, float, float]]:
        fixed = dict(zip(COMPONENTS, (*base.v0, *base.v1)))
        if self.samples is not None:
            rng = np.random.default_rng(self.seed)
            out = []
            for _ in range(self.samples):
                row = dict(fixed)
                for name in COMPONENTS:
                    if name in self.ranges:
                        lo, hi, _ = self.ranges[name]
                        row[name] = float(rng.uniform(lo, hi))
                out.append(tuple(row[c] for c in COMPONENTS))
            return out
        axes = []
        for name in COMPONENTS:
            if name in self.ranges:
                lo, hi, steps = self.ranges[name]
                axes.append([float(x) for x in np.linspace(lo, hi, int(steps))])
            else:
                axes.append([fixed[name]])
        return list(itertools.product(*axes))


def _run_sample(args):
    base, params, cap = args
    t0 = time.perf_counter()
    spec = base.with_vectors(params[:2], params[2:])
    res = attractor_grid(spec.pwt, cap)
    wall = (time.perf_counter() - t0) * 1000
    return res.status, res.steps, res.attractor.count, wall, [list(r) for r in spec.pwt.residuals]


@dataclass
class SweepResult:
    csv: str
    manifest: RunManifest
    stabilized_fraction: float


def finite_type_sweep(config: SweepConfig, workers: int = 1, timing: bool = False) -> SweepResult:
    """One CSV row per parameter sample; rows are always in sample order."""
    if config.mode != "finite_type":
        raise ValidationError(f"finite_type_sweep needs mode=finite_type, got {config.mode}")
    base = config.base_spec()
    params = config.parameters(base)
    jobs = [(base, p, config.cap) for p in params]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_sample, jobs))
    else:
        results = [_run_sample(j) for j in jobs]

    buf = io.StringIO()
    buf.write("sample_id," + ",".join(COMPONENTS) + ",status,steps,attractor_cells,wall_ms\n")
    manifest = RunManifest(config=config.to_dict())
    n_stab = 0
    for k, (p, (status, steps, cells, wall, resid)) in enumerate(zip(params, results)):
        n_stab += status == "stabilized"
        vals = ",".join(repr(float(x)) for x in p)
        ms = f"{wall:.3f}" if timing else "0"
        buf.write(f"{k},{vals},{status},{steps},{cells},{ms}\n")
        manifest.residuals.append(resid)
        manifest.wall_ms.append(round(wall, 3))
    frac = n_stab / len(params)
    buf.write(f"# stabilized_fraction={frac!r}\n")
    return SweepResult(buf.getvalue(), manifest, frac)


# -- semi-continuity --------------------------------------------------------

@dataclass
class SemicontinuityReport:
    radius: float
    epsilon: float
    samples: int
    seed: int
    unique: int
    invalid: int
    cap_reached: int
    max_directed: float
    within_epsilon: int
    rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _ball_sample(rng, dim: int, radius: float) -> np.ndarray:
    g = rng.standard_normal(dim)
    g /= np.linalg.norm(g)
    return g * radius * rng.uniform() ** (1.0 / dim)


def semicontinuity_probe(
    a_spec, radius: float, samples: int, epsilon: float, seed: int = 0, cap: int = 100_000
) -> SemicontinuityReport:
    """Compare attractors of perturbed vectors b against the base attractor.

    The parameter is the full tuple of branch vectors; b is drawn
    uniformly from the ball of ``radius`` around it, snapped, and
    deduplicated.  Reported: max over b of d(X_b, X_a) (directed) and how
    many X_b fit inside the ``epsilon``-neighborhood of X_a.
    """
    pwt = a_spec.pwt if isinstance(a_spec, TorusSpec) else a_spec
    base = attractor_grid(pwt, cap)
    if not base.stabilized:
        raise NotFiniteError(f"base spec reached cap={cap} without stabilizing")
    Xa = base.attractor
    Xa_eps = epsilon_neighborhood(Xa, epsilon)
    rng = np.random.default_rng(seed)
    a = np.array(pwt.vectors, dtype=float).ravel()
    seen: set = set()
    rows, invalid, capped, within, worst = [], 0, 0, 0, 0.0
    for _ in range(samples):
        b = (a + _ball_sample(rng, a.size, radius)).reshape(-1, 2)
        try:
            spec_b = pwt.with_vectors([tuple(v) for v in b])
        except SpecError:
            invalid += 1
            continue
        key = spec_b.offsets
        if key in seen:
            continue
        seen.add(key)
        res = attractor_grid(spec_b, cap)
        if not res.stabilized:
            capped += 1
            rows.append({"offsets": [list(o) for o in key], "status": res.status, "directed": None})
            continue
        d = directed_hausdorff(res.attractor, Xa)
        inside = res.attractor <= Xa_eps
        within += inside
        worst = max(worst, d)
        rows.append({"offsets": [list(o) for o in key], "status": res.status, "steps": res.steps,
                     "directed": d, "inside_epsilon": bool(inside)})
    return SemicontinuityReport(radius, epsilon, samples, seed, len(seen), invalid, capped, worst, within, rows)


# -- resolution scaling -----------------------------------------------------

@dataclass
class ScalingReport:
    rows: list
    label: str


def resolution_scaling(spec, resolutions, cap: int) -> ScalingReport:
    """Run the grid attractor at each cell size in ``resolutions`` (decreasing).

    The label is a reading aid, not a theorem: growing N(h) that hits the
    cap at the finest levels is reported as infinite-type evidence.
    """
    pwt = spec.pwt if isinstance(spec, TorusSpec) else spec
    hs = [float(h) for h in resolutions]
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValidationError("resolutions must be strictly decreasing cell sizes")
    rows = []
    for h in hs:
        s = pwt.with_geometry(pwt.geometry.rescaled(h))
        res = attractor_grid(s, cap)
        rows.append({"h": h, "nx": s.geometry.nx, "ny": s.geometry.ny, "status": res.status,
                     "steps": res.steps, "cells": res.attractor.count,
                     "area": res.attractor.count * h * h})
    capped = [r["status"] == "cap_reached" for r in rows]
    steps = [r["steps"] for r in rows]
    if all(capped):
        label = "cap_reached at all resolutions"
    elif capped[-1] and all(b >= a for a, b in zip(steps, steps[1:])):
        label = "infinite-type evidence"
    else:
        label = "finite-type consistent"
    return ScalingReport(rows, label)
