"""Declarative space-time and spatial sets: membership, grids, sampling.

Regions come in two families. Space-time variants live in E = (0, inf) x R^d
and their points are rows (t, x_1, .., x_d); spatial variants live in R^d.
Every region has a canonical JSON encoding {"kind": ..., parameters...}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RegionError",
    "TimeSliceBall",
    "SliceOf",
    "SpaceTimeBox",
    "Thorn",
    "SpatialBall",
    "SpatialAnnulus",
    "RegionUnion",
    "CellCloud",
    "contains",
    "discretize",
    "sample_uniform",
    "region_to_dict",
    "region_from_dict",
    "thorn_profile",
]

SLAB_EPS = 1e-9  # membership tolerance band for measure-zero time slices


class RegionError(ValueError):
    pass


def thorn_profile(name, param):
    """Shipped monotone thorn profiles h(s)."""
    if name == "constant":
        return lambda s: np.full_like(np.asarray(s, dtype=float), float(param))
    if name == "power":
        if param <= 0:
            raise RegionError("power profile needs alpha > 0")
        return lambda s: np.asarray(s, dtype=float) ** float(param)
    if name == "invlog":
        if param <= 0:
            raise RegionError("invlog profile needs beta > 0")
        return lambda s: np.abs(np.log(np.asarray(s, dtype=float))) ** (-float(param))
    raise RegionError(f"unknown thorn profile {name!r}")


@dataclass(frozen=True)
class TimeSliceBall:
    """{t0} x B(center, radius); the slice time is exact, not a slab."""

    t0: float
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.t0 <= 0:
            raise RegionError("slice time must be positive")
        if self.radius <= 0:
            raise RegionError("radius must be positive")

    spacetime = True

    @property
    def d(self):
        return len(self.center)

    def spatial_ball(self):
        return SpatialBall(self.center, self.radius)


@dataclass(frozen=True)
class SliceOf:
    """{t0} x base for an arbitrary spatial base region."""

    t0: float
    base: object

    def __post_init__(self):
        if self.t0 <= 0:
            raise RegionError("slice time must be positive")
        if getattr(self.base, "spacetime", True):
            raise RegionError("slice base must be a spatial region")

    spacetime = True

    @property
    def d(self):
        return self.base.d


@dataclass(frozen=True)
class SpaceTimeBox:
    t_lo: float
    t_hi: float
    corner_lo: tuple
    corner_hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "corner_lo", tuple(float(c) for c in self.corner_lo))
        object.__setattr__(self, "corner_hi", tuple(float(c) for c in self.corner_hi))
        if not 0 < self.t_lo < self.t_hi:
            raise RegionError("need 0 < t_lo < t_hi")
        if len(self.corner_lo) != len(self.corner_hi):
            raise RegionError("corner dimension mismatch")
        if not all(a < b for a, b in zip(self.corner_lo, self.corner_hi)):
            raise RegionError("corner_lo must be strictly below corner_hi")

    spacetime = True

    @property
    def d(self):
        return len(self.corner_lo)


@dataclass(frozen=True)
class Thorn:
    """{(s, y): t_lo < s < t_hi, |y| < sqrt(s) h(s)} for a named profile h."""

    profile: str
    param: float
    t_lo: float
    t_hi: float
    d: int = 1

    def __post_init__(self):
        if not 0 <= self.t_lo < self.t_hi:
            raise RegionError("need 0 <= t_lo < t_hi")
        if self.profile == "invlog" and self.t_hi >= 1.0:
            raise RegionError("invlog thorn needs t_hi < 1")
        thorn_profile(self.profile, self.param)  # validates

    spacetime = True

    def h(self, s):
        return thorn_profile(self.profile, self.param)(s)

    def max_radius(self):
        s = np.linspace(max(self.t_lo, 1e-12), self.t_hi, 1025)
        return float(np.max(np.sqrt(s) * self.h(s)))


@dataclass(frozen=True)
class SpatialBall:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.radius <= 0:
            raise RegionError("radius must be positive")

    spacetime = False

    @property
    def d(self):
        return len(self.center)


@dataclass(frozen=True)
class SpatialAnnulus:
    center: tuple
    r_in: float
    r_out: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not 0 < self.r_in < self.r_out:
            raise RegionError("need 0 < r_in < r_out")

    spacetime = False

    @property
    def d(self):
        return len(self.center)


@dataclass(frozen=True)
class RegionUnion:
    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise RegionError("union needs at least one member")
        st = {m.spacetime for m in self.members}
        if len(st) != 1:
            raise RegionError("union members must all be spatial or all space-time")
        if len({m.d for m in self.members}) != 1:
            raise RegionError("union members must share a dimension")

    @property
    def spacetime(self):
        return self.members[0].spacetime

    @property
    def d(self):
        return self.members[0].d


def _split_spacetime(points):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return pts[:, 0], pts[:, 1:]


def contains(region, points, slab_eps=SLAB_EPS):
    """Vectorized membership test.

    Space-time regions take rows (t, x); spatial regions take rows x.
    Returns a bool array (or scalar for a single point).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    scalar = np.asarray(points).ndim == 1
    want = (region.d + 1) if region.spacetime else region.d
    if pts.shape[1] != want:
        raise RegionError(f"point dimension {pts.shape[1]} != expected {want}")
    out = _contains(region, pts, slab_eps)
    return bool(out[0]) if scalar else out


def _contains(region, pts, slab_eps):
    if isinstance(region, TimeSliceBall):
        t, x = pts[:, 0], pts[:, 1:]
        r = np.linalg.norm(x - np.asarray(region.center), axis=1)
        return (np.abs(t - region.t0) <= slab_eps) & (r < region.radius)
    if isinstance(region, SliceOf):
        t, x = pts[:, 0], pts[:, 1:]
        return (np.abs(t - region.t0) <= slab_eps) & _contains(region.base, x, slab_eps)
    if isinstance(region, SpaceTimeBox):
        t, x = pts[:, 0], pts[:, 1:]
        ok = (t > region.t_lo) & (t < region.t_hi)
        lo = np.asarray(region.corner_lo)
        hi = np.asarray(region.corner_hi)
        return ok & np.all(x > lo, axis=1) & np.all(x < hi, axis=1)
    if isinstance(region, Thorn):
        t, x = pts[:, 0], pts[:, 1:]
        ok = (t > region.t_lo) & (t < region.t_hi)
        r = np.linalg.norm(x, axis=1)
        lim = np.zeros_like(t)
        lim[ok] = np.sqrt(t[ok]) * region.h(t[ok])
        return ok & (r < lim)
    if isinstance(region, SpatialBall):
        r = np.linalg.norm(pts - np.asarray(region.center), axis=1)
        return r < region.radius
    if isinstance(region, SpatialAnnulus):
        r = np.linalg.norm(pts - np.asarray(region.center), axis=1)
        return (r > region.r_in) & (r < region.r_out)
    if isinstance(region, RegionUnion):
        out = np.zeros(pts.shape[0], dtype=bool)
        for m in region.members:
            out |= _contains(m, pts, slab_eps)
        return out
    raise RegionError(f"unknown region type {type(region).__name__}")


def _bounds(region):
    """Axis-aligned bounding box as (lo, hi) arrays in ambient coordinates."""
    if isinstance(region, TimeSliceBall):
        c = np.asarray(region.center)
        return c - region.radius, c + region.radius
    if isinstance(region, SliceOf):
        return _bounds(region.base)
    if isinstance(region, SpaceTimeBox):
        lo = np.concatenate([[region.t_lo], region.corner_lo])
        hi = np.concatenate([[region.t_hi], region.corner_hi])
        return lo, hi
    if isinstance(region, Thorn):
        r = region.max_radius()
        lo = np.concatenate([[region.t_lo], -r * np.ones(region.d)])
        hi = np.concatenate([[region.t_hi], r * np.ones(region.d)])
        return lo, hi
    if isinstance(region, SpatialBall):
        c = np.asarray(region.center)
        return c - region.radius, c + region.radius
    if isinstance(region, SpatialAnnulus):
        c = np.asarray(region.center)
        return c - region.r_out, c + region.r_out
    if isinstance(region, RegionUnion):
        parts = [_bounds(m) for m in region.members]
        lo = np.min([p[0] for p in parts], axis=0)
        hi = np.max([p[1] for p in parts], axis=0)
        return lo, hi
    raise RegionError(f"unknown region type {type(region).__name__}")


@dataclass(frozen=True)
class CellCloud:
    """Grid cells kept by the center-in-region rule.

    ``coords`` holds spatial centers (n, d); for space-time clouds ``times``
    holds the matching time coordinates, and for slice clouds it is constant.
    Cell volume is resolution**ambient_dim, spatial-only for time slices.
    """

    parent: object
    resolution: float
    coords: np.ndarray
    times: np.ndarray | None
    volume: float

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def d(self):
        return self.coords.shape[1]

    @property
    def is_slice(self):
        return _is_slice_region(self.parent)

    def volumes(self):
        return np.full(self.n, self.volume)

    def translated(self, dt, dx):
        """Same cell topology, shifted centers; times must stay positive."""
        if self.times is None:
            return CellCloud(self.parent, self.resolution, self.coords + np.asarray(dx),
                             None, self.volume)
        times = self.times + dt
        if np.any(times <= 0):
            raise RegionError("translated cloud leaves E (nonpositive times)")
        return CellCloud(self.parent, self.resolution, self.coords + np.asarray(dx),
                         times, self.volume)


def _axis_centers(lo, hi, res):
    n = int(math.ceil((hi - lo) / res - 1e-12))
    n = max(n, 1)
    return lo + (np.arange(n) + 0.5) * res


def _is_slice_region(region):
    if isinstance(region, (TimeSliceBall, SliceOf)):
        return True
    return (isinstance(region, RegionUnion) and region.spacetime
            and all(_is_slice_region(m) for m in region.members))


def _slice_spatial(region):
    """(t0, spatial base) of a slice region; unions must share one t0."""
    if isinstance(region, TimeSliceBall):
        return region.t0, region.spatial_ball()
    if isinstance(region, SliceOf):
        return region.t0, region.base
    parts = [_slice_spatial(m) for m in region.members]
    times = {t for t, _ in parts}
    if len(times) != 1:
        raise RegionError("slice union members must share the slice time")
    return times.pop(), RegionUnion(tuple(b for _, b in parts))


def discretize(region, resolution):
    """Axis-aligned grid of pitch ``resolution`` clipped by cell-center membership."""
    if resolution <= 0:
        raise RegionError("resolution must be positive")

    if getattr(region, "spacetime", False) and _is_slice_region(region):
        # slice: grid the spatial base only, record the slice time per member
        if isinstance(region, RegionUnion):
            subs = [discretize(m, resolution) for m in region.members]
            coords = np.concatenate([c.coords for c in subs])
            times = np.concatenate([c.times for c in subs])
        else:
            t0, base = _slice_spatial(region)
            spatial = discretize(base, resolution)
            coords = spatial.coords
            times = np.full(coords.shape[0], t0)
        if coords.shape[0] == 0:
            raise RegionError("empty discretization")
        return CellCloud(region, resolution, coords, times,
                         resolution ** region.d)

    lo, hi = _bounds(region)
    axes = [_axis_centers(lo[i], hi[i], resolution) for i in range(lo.size)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lo.size)
    keep = contains(region, mesh)
    cells = mesh[keep]
    if cells.shape[0] == 0:
        raise RegionError("empty discretization")
    if region.spacetime:
        return CellCloud(region, resolution, cells[:, 1:], cells[:, 0],
                         resolution ** (region.d + 1))
    return CellCloud(region, resolution, cells, None, resolution ** region.d)


def sample_uniform(region, n, seed):
    """n i.i.d. uniform points by rejection from the bounding box.

    TimeSliceBall is sampled in its spatial ball. Deterministic per seed;
    aborts if the acceptance rate falls below 1e-4.
    """
    if isinstance(region, TimeSliceBall):
        region = region.spatial_ball()
    elif isinstance(region, SliceOf):
        region = region.base
    rng = np.random.default_rng(seed)
    lo, hi = _bounds(region)
    dim = lo.size
    out = np.empty((0, dim))
    if n == 0:
        return out
    proposed = 0
    while out.shape[0] < n:
        chunk = max(4 * (n - out.shape[0]), 256)
        pts = rng.uniform(lo, hi, size=(chunk, dim))
        acc = pts[contains(region, pts)]
        out = np.concatenate([out, acc])
        proposed += chunk
        if proposed >= 1_000_000 and out.shape[0] < 1e-4 * proposed:
            raise RuntimeError(
                f"rejection acceptance rate below 1e-4 for {type(region).__name__}: "
                f"{out.shape[0]}/{proposed} accepted"
            )
    return out[:n]


# --- canonical JSON encoding -------------------------------------------------

def region_to_dict(region):
    if isinstance(region, TimeSliceBall):
        return {"kind": "time_slice_ball", "t0": region.t0,
                "center": list(region.center), "radius": region.radius}
    if isinstance(region, SliceOf):
        return {"kind": "slice_of", "t0": region.t0,
                "base": region_to_dict(region.base)}
    if isinstance(region, SpaceTimeBox):
        return {"kind": "box", "t_lo": region.t_lo, "t_hi": region.t_hi,
                "corner_lo": list(region.corner_lo),
                "corner_hi": list(region.corner_hi)}
    if isinstance(region, Thorn):
        return {"kind": "thorn", "profile": region.profile, "param": region.param,
                "t_lo": region.t_lo, "t_hi": region.t_hi, "d": region.d}
    if isinstance(region, SpatialBall):
        return {"kind": "ball", "center": list(region.center),
                "radius": region.radius}
    if isinstance(region, SpatialAnnulus):
        return {"kind": "annulus", "center": list(region.center),
                "r_in": region.r_in, "r_out": region.r_out}
    if isinstance(region, RegionUnion):
        return {"kind": "union",
                "members": [region_to_dict(m) for m in region.members]}
    raise RegionError(f"unknown region type {type(region).__name__}")


def region_from_dict(spec):
    try:
        kind = spec["kind"]
    except (TypeError, KeyError):
        raise RegionError("region spec missing 'kind'") from None
    try:
        if kind == "time_slice_ball":
            return TimeSliceBall(spec["t0"], spec["center"], spec["radius"])
        if kind == "slice_of":
            return SliceOf(spec["t0"], region_from_dict(spec["base"]))
        if kind == "box":
            return SpaceTimeBox(spec["t_lo"], spec["t_hi"],
                                spec["corner_lo"], spec["corner_hi"])
        if kind == "thorn":
            return Thorn(spec["profile"], spec["param"], spec["t_lo"],
                         spec["t_hi"], spec.get("d", 1))
        if kind == "ball":
            return SpatialBall(spec["center"], spec["radius"])
        if kind == "annulus":
            return SpatialAnnulus(spec["center"], spec["r_in"], spec["r_out"])
        if kind == "union":
            return RegionUnion(tuple(region_from_dict(m) for m in spec["members"]))
    except KeyError as exc:
        raise RegionError(f"region spec {kind!r} missing field {exc}") from None
    raise RegionError(f"unknown region kind {kind!r}")
