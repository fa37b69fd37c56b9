"""Exact rational engine for one-dimensional piecewise translations.

Covers interval translation maps (branch images may overlap), interval
exchanges (images tile the domain) and double rotations of the circle
(``mode="circle"``, translation taken mod 1).  All sets are finite unions
of *closed* rational intervals, so every iterate is compact and the
stabilization test is plain equality of canonical forms.

>>> spec = ItmSpec.from_dict({
...     "mode": "line", "omega": ["0", "1"],
...     "branches": [{"region": ["0", "1/2"], "vector": "1/4"},
...                  {"region": ["1/2", "1"], "vector": "-1/2"}]})
>>> res = attractor_exact(spec)
>>> res.status, res.steps, str(res.attractor)
('finite', 1, '[0/1,3/4]')
"""
from __future__ import annotations

import itertools
import json
import math
import re
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DomainError, InvariantError, SpecError, ValidationError

Rational = Fraction

DEFAULT_CAP = 100_000

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


def parse_rational(value) -> Fraction:
    """Parse ``"p/q"``, ``"p"`` or a Python int into a Fraction.

    Decimal notation (``"0.25"`` or a float) is rejected on purpose: a
    decimal literal almost never denotes the rational the user meant.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if not isinstance(value, str):
        raise ValidationError(f"rationals must be 'p/q' strings, got {value!r}")
    m = _RATIONAL_RE.match(value)
    if m is None:
        raise ValidationError(f"not an exact rational 'p/q': {value!r}")
    num, den = m.group(1), m.group(2)
    if den is not None and int(den) == 0:
        raise ValidationError(f"zero denominator in {value!r}")
    return Fraction(int(num), int(den) if den is not None else 1)


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True, order=True)
class Interval1:
    """Closed interval ``[lo, hi]``; ``lo == hi`` is a single point."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        if lo > hi:
            raise ValidationError(f"malformed interval: lo={lo} > hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def shifted(self, v) -> "Interval1":
        return Interval1(self.lo + v, self.hi + v)

    def clip(self, other: "Interval1") -> "Interval1 | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval1(lo, hi) if lo <= hi else None

    def __str__(self):
        return f"[{format_rational(self.lo)},{format_rational(self.hi)}]"


def _merge(parts: Iterable[Interval1]) -> tuple[Interval1, ...]:
    out: list[Interval1] = []
    for p in sorted(parts):
        if out and p.lo <= out[-1].hi:
            if p.hi > out[-1].hi:
                out[-1] = Interval1(out[-1].lo, p.hi)
        else:
            out.append(p)
    return tuple(out)


@dataclass(frozen=True)
class IntervalUnion:
    """Finite union of closed intervals, kept in canonical form.

    Parts are sorted, pairwise disjoint and non-touching; overlapping or
    touching input intervals are merged on construction, so two unions
    are equal as point sets exactly when their ``parts`` are equal.
    """

    parts: tuple[Interval1, ...] = ()

    def __post_init__(self):
        parts = []
        for p in self.parts:
            if not isinstance(p, Interval1):
                p = Interval1(*p)
            parts.append(p)
        object.__setattr__(self, "parts", _merge(parts))

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def __bool__(self):
        return bool(self.parts)

    def __contains__(self, x) -> bool:
        return any(x in p for p in self.parts)

    @property
    def length(self) -> Fraction:
        return total_length(self)

    def clip(self, iv: Interval1) -> "IntervalUnion":
        clipped = (p.clip(iv) for p in self.parts if p.hi >= iv.lo and p.lo <= iv.hi)
        return IntervalUnion(tuple(c for c in clipped if c is not None))

    def intersection(self, other: "IntervalUnion") -> "IntervalUnion":
        out = []
        for q in other.parts:
            out.extend(self.clip(q).parts)
        return IntervalUnion(tuple(out))

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion(self.parts + other.parts)

    def shifted(self, v) -> "IntervalUnion":
        return IntervalUnion(tuple(p.shifted(v) for p in self.parts))

    def issubset(self, other: "IntervalUnion") -> bool:
        j, theirs = 0, other.parts
        for p in self.parts:
            while j < len(theirs) and theirs[j].hi < p.lo:
                j += 1
            if j == len(theirs) or not (theirs[j].lo <= p.lo and p.hi <= theirs[j].hi):
                return False
        return True

    def __le__(self, other: "IntervalUnion") -> bool:
        return self.issubset(other)

    def __str__(self):
        if not self.parts:
            return "{}"
        return "U".join(str(p) for p in self.parts)


def normalize(parts: Iterable[Interval1 | Sequence]) -> IntervalUnion:
    """Canonical IntervalUnion of ``parts`` (touching intervals merged)."""
    return IntervalUnion(tuple(parts))


def total_length(U: IntervalUnion) -> Fraction:
    return sum((p.length for p in U.parts), Fraction(0))


# -- map specification -----------------------------------------------------

UNIT = Interval1(Fraction(0), Fraction(1))


@dataclass(frozen=True)
class Branch1:
    region: Interval1
    vector: Fraction

    def __post_init__(self):
        object.__setattr__(self, "vector", Fraction(self.vector))


@dataclass(frozen=True)
class ItmSpec:
    """A 1-D piecewise translation: domain, covering branches, mode.

    Branch regions must lie in ``omega`` and cover it; overlaps are
    allowed and points in several branches get several images.  In
    ``line`` mode each branch image must stay inside ``omega``; in
    ``circle`` mode ``omega`` is ``[0, 1]`` with ``0 ~ 1``.
    """

    omega: Interval1
    branches: tuple[Branch1, ...]
    mode: str = "line"

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if self.mode not in ("line", "circle"):
            raise SpecError(f"mode must be 'line' or 'circle', got {self.mode!r}")
        if not self.branches:
            raise SpecError("at least one branch is required")
        if self.mode == "circle" and self.omega != UNIT:
            raise SpecError("circle mode requires omega = [0, 1]")
        whole = IntervalUnion((self.omega,))
        for i, b in enumerate(self.branches):
            if not (b.region.lo >= self.omega.lo and b.region.hi <= self.omega.hi):
                raise SpecError(f"branch {i} region {b.region} not inside omega {self.omega}")
            if self.mode == "line" and not (
                b.region.lo + b.vector >= self.omega.lo and b.region.hi + b.vector <= self.omega.hi
            ):
                raise SpecError(
                    f"branch {i}: image {b.region.shifted(b.vector)} leaves omega {self.omega}"
                )
        if normalize(b.region for b in self.branches) != whole:
            raise SpecError("branch regions do not cover omega")

    @property
    def omega_set(self) -> IntervalUnion:
        return IntervalUnion((self.omega,))

    @classmethod
    def from_dict(cls, d: dict) -> "ItmSpec":
        try:
            omega = Interval1(*(parse_rational(x) for x in d["omega"]))
            branches = tuple(
                Branch1(
                    Interval1(*(parse_rational(x) for x in b["region"])),
                    parse_rational(b["vector"]),
                )
                for b in d["branches"]
            )
            mode = d.get("mode", "line")
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed ITM spec: {exc}") from exc
        return cls(omega, branches, mode)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "omega": [format_rational(self.omega.lo), format_rational(self.omega.hi)],
            "branches": [
                {
                    "region": [format_rational(b.region.lo), format_rational(b.region.hi)],
                    "vector": format_rational(b.vector),
                }
                for b in self.branches
            ],
        }


def load_itm_spec(path) -> ItmSpec:
    with open(path) as fh:
        return ItmSpec.from_dict(json.load(fh))


# -- dynamics --------------------------------------------------------------
#
# Every endpoint reachable from omega lies on the lattice (1/D)Z, where D is
# the lcm of all denominators in the spec (and in the input set).  The orbit
# loop therefore runs on integer pairs scaled by D and converts back to
# Fractions only at the boundary.

IntParts = list  # list[tuple[int, int]], canonical: sorted, disjoint, non-touching


def _common_denominator(values: Iterable[Fraction]) -> int:
    D = 1
    for q in values:
        D = D * q.denominator // math.gcd(D, q.denominator)
    return D


def _spec_values(spec: ItmSpec):
    yield spec.omega.lo
    yield spec.omega.hi
    for b in spec.branches:
        yield b.region.lo
        yield b.region.hi
        yield b.vector


def _to_int(U: IntervalUnion, D: int) -> IntParts:
    return [(int(p.lo * D), int(p.hi * D)) for p in U.parts]


def _from_int(parts: IntParts, D: int) -> IntervalUnion:
    out = IntervalUnion()
    object.__setattr__(
        out, "parts", tuple(Interval1(Fraction(lo, D), Fraction(hi, D)) for lo, hi in parts)
    )
    return out


def _merge_int(parts: IntParts) -> IntParts:
    parts.sort()
    out: IntParts = []
    for lo, hi in parts:
        if out and lo <= out[-1][1]:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return out


def _subset_int(a: IntParts, b: IntParts) -> bool:
    j = 0
    for lo, hi in a:
        while j < len(b) and b[j][1] < lo:
            j += 1
        if j == len(b) or not (b[j][0] <= lo and hi <= b[j][1]):
            return False
    return True


class _IntMap:
    """The spec's branches scaled to integers by a common denominator."""

    def __init__(self, spec: ItmSpec, D: int):
        self.D = D
        self.circle = spec.mode == "circle"
        self.branches = [
            (int(b.region.lo * D), int(b.region.hi * D), int(b.vector * D)) for b in spec.branches
        ]

    def apply(self, K: IntParts) -> IntParts:
        D = self.D
        starts = [lo for lo, _ in K]
        out: IntParts = []
        for blo, bhi, v in self.branches:
            # first part that could reach blo
            i = max(bisect_right(starts, blo) - 1, 0)
            while i < len(K) and K[i][0] <= bhi:
                lo, hi = max(K[i][0], blo), min(K[i][1], bhi)
                i += 1
                if lo > hi:
                    continue
                lo, hi = lo + v, hi + v
                if self.circle:
                    k = lo // D
                    lo, hi = lo - k * D, hi - k * D
                    if hi > D:
                        out.append((lo, D))
                        lo, hi = 0, hi - D
                out.append((lo, hi))
        out = _merge_int(out)
        if self.circle and out and (out[0][0] == 0 or out[-1][1] == D):
            out = _merge_int(out + [(0, 0), (D, D)])
        return out


def apply_itm(spec: ItmSpec, K: IntervalUnion) -> IntervalUnion:
    """F(K) = union over branches of (K ∩ B_i) + v_i."""
    if not K.issubset(spec.omega_set):
        raise DomainError(f"set {K} is not contained in omega {spec.omega}")
    D = _common_denominator(
        itertools.chain(_spec_values(spec), (x for p in K.parts for x in (p.lo, p.hi)))
    )
    return _from_int(_IntMap(spec, D).apply(_to_int(K, D)), D)


@dataclass(frozen=True)
class AttractorResult1:
    """Outcome of iterating the map from omega.

    ``status == "finite"``: ``attractor`` is K_N with F(K_N) = K_N and
    ``steps`` is N.  ``status == "cap_reached"``: ``attractor`` holds the
    last iterate and ``steps`` the cap.  ``length_trace[n]`` is the total
    length of K_n in both cases.
    """

    status: str
    steps: int
    attractor: IntervalUnion
    length_trace: tuple[Fraction, ...] = field(default=())

    @property
    def is_finite(self) -> bool:
        return self.status == "finite"

    def describe(self) -> str:
        if self.is_finite:
            return f"finite N={self.steps} A={self.attractor}"
        return (
            f"cap_reached cap={self.steps} parts={len(self.attractor)} "
            f"length={format_rational(self.length_trace[-1])}"
        )


def attractor_exact(spec: ItmSpec, cap: int = DEFAULT_CAP) -> AttractorResult1:
    """Iterate K_{n+1} = F(K_n) from K_0 = omega until K_{N+1} = K_N or ``cap``."""
    if cap < 1:
        raise ValidationError(f"cap must be >= 1, got {cap}")
    D = _common_denominator(_spec_values(spec))
    F = _IntMap(spec, D)
    K = _to_int(spec.omega_set, D)
    trace = [sum(hi - lo for lo, hi in K)]
    status, steps = "cap_reached", cap
    for n in range(cap):
        nxt = F.apply(K)
        if nxt == K:
            status, steps = "finite", n
            break
        if not _subset_int(nxt, K):
            raise InvariantError(
                f"orbit not monotone at step {n + 1}: {_from_int(nxt, D)} is not inside {_from_int(K, D)}"
            )
        K = nxt
        trace.append(sum(hi - lo for lo, hi in K))
    return AttractorResult1(status, steps, _from_int(K, D), tuple(Fraction(t, D) for t in trace))


def is_exchange(spec: ItmSpec) -> bool:
    """True iff the branch images tile omega up to finitely many points."""
    D = _common_denominator(_spec_values(spec))
    F = _IntMap(spec, D)
    images = []
    for blo, bhi, v in F.branches:
        single = _IntMap.__new__(_IntMap)
        single.D, single.circle, single.branches = D, F.circle, [(blo, bhi, v)]
        images.append(single.apply([(blo, bhi)]))
    for i in range(len(images)):
        for j in range(i + 1, len(images)):
            if _overlap_length(images[i], images[j]) != 0:
                return False
    # a closed subset of omega with full length is omega itself
    olo, ohi = _to_int(spec.omega_set, D)[0]
    return sum(hi - lo for img in images for lo, hi in img) == ohi - olo


def _overlap_length(a: IntParts, b: IntParts) -> int:
    total = 0
    for lo, hi in a:
        for c, d in b:
            total += max(0, min(hi, d) - max(lo, c))
    return total
