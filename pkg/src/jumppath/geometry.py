"""Open balls, open cubes, and the few set operations the estimators need."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

HIT_OR_MISS_POINTS = 1_000_000


class GeometryError(ValueError):
    pass


class Region:
    """Base for sets in R^d: ``contains`` on (m, d) arrays, ``volume``, ``bbox``."""

    d: int

    def contains(self, pts) -> np.ndarray:
        raise NotImplementedError

    def volume(self) -> float:
        raise NotImplementedError

    def bbox(self):
        raise NotImplementedError

    def __contains__(self, pt) -> bool:
        return bool(self.contains(np.asarray(pt, dtype=float).reshape(1, -1))[0])

    def _pts(self, pts):
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1) if self.d > 1 or pts.size == 1 else pts.reshape(-1, 1)
        if pts.shape[-1] != self.d:
            raise GeometryError(f"points have dimension {pts.shape[-1]}, region has d={self.d}")
        return pts


@dataclass(frozen=True, eq=False)
class Domain(Region):
    """Open ball B(center, extent) or open cube Q(center, extent) (side length = extent).

    ``extent == 0`` is allowed and gives the empty set.
    """

    shape: str
    center: tuple
    extent: float

    def __post_init__(self):
        if self.shape not in ("ball", "cube"):
            raise GeometryError(f"shape must be 'ball' or 'cube', got {self.shape!r}")
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if c.ndim != 1:
            raise GeometryError("center must be a point")
        object.__setattr__(self, "center", tuple(float(v) for v in c))
        if not self.extent >= 0 or not math.isfinite(self.extent):
            raise GeometryError(f"extent must be finite and >= 0, got {self.extent}")
        object.__setattr__(self, "extent", float(self.extent))

    @classmethod
    def ball(cls, center, radius) -> "Domain":
        return cls("ball", center, radius)

    @classmethod
    def cube(cls, center, side) -> "Domain":
        return cls("cube", center, side)

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.center)

    def contains(self, pts) -> np.ndarray:
        pts = self._pts(pts)
        diff = pts - self.c
        if self.shape == "ball":
            return np.einsum("...i,...i->...", diff, diff) < self.extent**2
        return np.all(np.abs(diff) < 0.5 * self.extent, axis=-1)

    def volume(self) -> float:
        if self.shape == "cube":
            return self.extent**self.d
        d = self.d
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * self.extent**d

    def bbox(self):
        h = self.extent if self.shape == "ball" else 0.5 * self.extent
        return self.c - h, self.c + h

    def __repr__(self) -> str:
        sym = "B" if self.shape == "ball" else "Q"
        return f"{sym}({list(self.center)}, {self.extent:g})"


@dataclass(frozen=True, eq=False)
class WholeSpace(Region):
    d: int

    def contains(self, pts):
        return np.ones(self._pts(pts).shape[0], dtype=bool)

    def volume(self):
        return math.inf

    def bbox(self):
        return np.full(self.d, -math.inf), np.full(self.d, math.inf)


@dataclass(frozen=True, eq=False)
class EmptySet(Region):
    d: int

    def contains(self, pts):
        return np.zeros(self._pts(pts).shape[0], dtype=bool)

    def volume(self):
        return 0.0

    def bbox(self):
        return np.zeros(self.d), np.zeros(self.d)


@dataclass(frozen=True, eq=False)
class Union(Region):
    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise GeometryError("union needs at least one part")
        if len({p.d for p in parts}) != 1:
            raise GeometryError("union parts must share a dimension")
        object.__setattr__(self, "parts", parts)

    @property
    def d(self) -> int:
        return self.parts[0].d

    def contains(self, pts):
        pts = self._pts(pts)
        out = np.zeros(pts.shape[0], dtype=bool)
        for p in self.parts:
            out |= p.contains(pts)
        return out

    def volume(self):
        if _pairwise_disjoint(self.parts):
            return float(sum(p.volume() for p in self.parts))
        return hit_or_miss_volume(self)

    def bbox(self):
        los, his = zip(*(p.bbox() for p in self.parts))
        return np.min(los, axis=0), np.max(his, axis=0)


@dataclass(frozen=True, eq=False)
class Difference(Region):
    """``outer`` minus ``inner``."""

    outer: Region
    inner: Region

    @property
    def d(self) -> int:
        return self.outer.d

    def contains(self, pts):
        pts = self._pts(pts)
        return self.outer.contains(pts) & ~self.inner.contains(pts)

    def volume(self):
        if is_subset(self.inner, self.outer):
            return self.outer.volume() - self.inner.volume()
        return hit_or_miss_volume(self)

    def bbox(self):
        return self.outer.bbox()


def _boxes_disjoint(a: Region, b: Region) -> bool:
    alo, ahi = a.bbox()
    blo, bhi = b.bbox()
    return bool(np.any(ahi <= blo) or np.any(bhi <= alo))


def _pairwise_disjoint(parts: Sequence[Region]) -> bool:
    return all(
        _boxes_disjoint(parts[i], parts[j])
        for i in range(len(parts))
        for j in range(i + 1, len(parts))
    )


def hit_or_miss_volume(region: Region, n: int = HIT_OR_MISS_POINTS, seed: int = 0) -> float:
    lo, hi = region.bbox()
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        return math.inf
    box = float(np.prod(hi - lo))
    if box == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    pts = lo + (hi - lo) * rng.random((n, region.d))
    return box * float(np.mean(region.contains(pts)))


def is_subset(a: Region, b: Region) -> bool:
    """Exact for balls, cubes, unions of them and the trivial sets; conservative otherwise."""
    if isinstance(a, EmptySet) or (isinstance(a, Domain) and a.extent == 0):
        return True
    if isinstance(b, WholeSpace):
        return True
    if isinstance(a, WholeSpace):
        return isinstance(b, WholeSpace)
    if isinstance(a, Union):
        return all(is_subset(p, b) for p in a.parts)
    if isinstance(a, Difference):
        return is_subset(a.outer, b)
    if isinstance(b, Union):
        return any(is_subset(a, p) for p in b.parts)
    if isinstance(a, Domain) and isinstance(b, Domain):
        gap = np.abs(a.c - b.c)
        tol = 1e-12
        if b.shape == "ball":
            if a.shape == "ball":
                return float(np.linalg.norm(gap)) + a.extent <= b.extent + tol
            return float(np.linalg.norm(gap + 0.5 * a.extent)) <= b.extent + tol
        half = 0.5 * b.extent
        if a.shape == "ball":
            return float(np.max(gap)) + a.extent <= half + tol
        return float(np.max(gap)) + 0.5 * a.extent <= half + tol
    if isinstance(b, Difference):
        return is_subset(a, b.outer) and _boxes_disjoint(a, b.inner)
    return False


def cube_grid_union(center, side: float, fraction: float, cells_per_axis: int) -> Union:
    """Scattered union of small cubes filling ``fraction`` of Q(center, side).

    The cube is cut into ``cells_per_axis**d`` cells; a small cube of volume
    ``fraction * cell volume`` sits at the centre of each cell.
    """
    c = np.atleast_1d(np.asarray(center, dtype=float))
    d = c.size
    cell = side / cells_per_axis
    small = cell * fraction ** (1.0 / d)
    offs = (np.arange(cells_per_axis) + 0.5) * cell - 0.5 * side
    grids = np.meshgrid(*([offs] * d), indexing="ij")
    centres = np.stack([g.reshape(-1) for g in grids], axis=1) + c
    return Union(tuple(Domain.cube(tuple(p), small) for p in centres))
