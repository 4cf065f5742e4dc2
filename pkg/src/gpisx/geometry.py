"""Geometric primitives shared across the package.

Points are plain ``numpy`` arrays: a single point is shape ``(3,)`` (or
``(2,)`` for xy), a batch is ``(n, 3)``. World frame has z pointing up and
all lengths are in meters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTriangle, EmptyCloud

__all__ = [
    "Aabb3",
    "PointCloud3",
    "as_points",
    "bounding_box",
    "triangle_normal",
    "orthonormal_basis",
]


def as_points(pts, dim=3):
    """Return ``pts`` as a finite float64 array of shape ``(n, dim)``."""
    arr = np.asarray(pts, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, dim) if arr.size else np.empty((0, dim))
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points must be finite")
    return arr


@dataclass(frozen=True)
class Aabb3:
    """Axis-aligned box, ``min <= max`` componentwise."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=float).reshape(3)
        hi = np.asarray(self.max, dtype=float).reshape(3)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box corners must be finite")
        if np.any(lo > hi):
            raise ValueError(f"box min {lo} exceeds max {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def extent(self):
        return self.max - self.min

    @property
    def center(self):
        return 0.5 * (self.min + self.max)

    def contains(self, pts, tol=0.0):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.all((pts >= self.min - tol) & (pts <= self.max + tol), axis=1)

    def contains_xy(self, xy, tol=0.0):
        xy = np.atleast_2d(np.asarray(xy, dtype=float))[:, :2]
        return np.all((xy >= self.min[:2] - tol) & (xy <= self.max[:2] + tol), axis=1)

    def translated(self, offset):
        offset = np.asarray(offset, dtype=float)
        return Aabb3(self.min + offset, self.max + offset)

    def to_dict(self):
        return {"min": self.min.tolist(), "max": self.max.tolist()}


@dataclass(frozen=True)
class PointCloud3:
    """Ordered set of 3D points in a named frame."""

    points: np.ndarray
    frame: str = field(default="world")

    def __post_init__(self):
        pts = as_points(self.points)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def xy(self):
        return self.points[:, :2]

    @property
    def z(self):
        return self.points[:, 2]


def bounding_box(cloud):
    """Tight componentwise bounds of ``cloud`` (a PointCloud3 or an (n, 3) array)."""
    pts = cloud.points if isinstance(cloud, PointCloud3) else as_points(cloud)
    if len(pts) == 0:
        raise EmptyCloud("cannot bound an empty cloud")
    return Aabb3(pts.min(axis=0), pts.max(axis=0))


def triangle_normal(a, b, c, inward=True):
    """Unit normal of the plane through ``a, b, c``.

    With ``inward=True`` the sign is chosen so that the normal points down
    (``dz <= 0``), i.e. into the surface. Vertical triangles keep the sign
    given by the vertex winding.
    """
    a, b, c = (np.asarray(p, dtype=float) for p in (a, b, c))
    n = np.cross(b - a, c - a)
    norm = np.linalg.norm(n)
    if not norm > 1e-12:
        raise DegenerateTriangle(f"collinear vertices {a}, {b}, {c}")
    n = n / norm
    if inward and n[2] > 1e-9:
        n = -n
    return n


def orthonormal_basis(normal):
    """Two unit vectors spanning the plane orthogonal to ``normal``.

    Deterministic: the helper axis is the world axis least aligned with
    ``normal``.
    """
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(n)))] = 1.0
    u = np.cross(n, helper)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    return u, v
