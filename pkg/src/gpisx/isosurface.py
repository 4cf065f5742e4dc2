"""Zero level set of the GPIS mean as a triangle mesh.

Lattice sampling is done here; the case-table walk is delegated to
``skimage.measure.marching_cubes(method="lorensen")``. Because scikit-image
works in float32, vertex positions are recomputed in float64 by linear
interpolation along the lattice edge that carries each vertex, and the
per-vertex variance is interpolated with the same weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates
from skimage.measure import marching_cubes as _sk_marching_cubes

from .errors import GridTooLarge
from .geometry import as_points

__all__ = [
    "MAX_SAMPLES",
    "VolumeGrid",
    "TriangleMesh",
    "lattice_axes",
    "sample_volume",
    "sample_volume_from_testset",
    "marching_cubes",
    "crossing_nodes",
]

MAX_SAMPLES = 2_000_000


@dataclass(frozen=True)
class VolumeGrid:
    """Scalar samples on ``origin + index * spacing`` with ``values.shape == dims``."""

    origin: np.ndarray
    spacing: np.ndarray
    values: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3))
        object.__setattr__(self, "spacing", np.broadcast_to(np.asarray(self.spacing, dtype=float), (3,)).copy())
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 3 or min(vals.shape) < 2:
            raise ValueError(f"grid needs at least 2 samples per axis, got {vals.shape}")
        var = np.asarray(self.variances, dtype=float)
        if var.shape != vals.shape:
            raise ValueError("values and variances differ in shape")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "variances", var)

    @property
    def dims(self):
        return self.values.shape

    def node_positions(self, idx):
        return self.origin + np.asarray(idx) * self.spacing


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    vertex_attrs: np.ndarray

    @classmethod
    def empty(cls):
        return cls(np.empty((0, 3)), np.empty((0, 3), dtype=np.int64), np.empty(0))

    def __len__(self):
        return len(self.triangles)


def lattice_axes(region, spacing):
    spacing = np.broadcast_to(np.asarray(spacing, dtype=float), (3,))
    if np.any(spacing <= 0):
        raise ValueError("spacing must be positive")
    ext = region.extent
    if np.any(ext <= 0):
        raise ValueError("sampling region is degenerate")
    dims = np.floor(ext / spacing + 1e-9).astype(int) + 1
    return [region.min[i] + spacing[i] * np.arange(dims[i]) for i in range(3)]


def crossing_nodes(values, iso=0.0):
    """Mask of lattice nodes at either end of an edge that crosses ``iso``.

    These are the only nodes whose variance enters the per-vertex
    interpolation of the extracted mesh.
    """
    v = np.asarray(values) - iso
    mask = np.zeros(v.shape, dtype=bool)
    for ax in range(3):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        a, b = v[tuple(lo)], v[tuple(hi)]
        cross = (a * b <= 0) & (a != b)
        mask[tuple(lo)] |= cross
        mask[tuple(hi)] |= cross
    return mask


def _fill_variance(gpis, positions_of, values, mode, iso):
    var = np.full(values.shape, np.nan)
    if mode == "none":
        return var
    if mode == "full":
        mask = np.ones(values.shape, dtype=bool)
    elif mode == "surface":
        mask = crossing_nodes(values, iso)
    else:
        raise ValueError(f"unknown variance mode {mode!r}")
    idx = np.argwhere(mask)
    if len(idx):
        var[mask] = gpis.query(positions_of(idx)).variance
    return var


def sample_volume(gpis, region, spacing, max_samples=MAX_SAMPLES, variance="full", iso=0.0):
    """Evaluate the GPIS on a lattice covering ``region``.

    ``variance`` selects where posterior variances are computed: ``"full"``
    (every node), ``"surface"`` (only the ends of lattice edges crossing
    ``iso``, the rest NaN) or ``"none"``.
    """
    axes = lattice_axes(region, spacing)
    dims = tuple(len(a) for a in axes)
    if int(np.prod(dims)) > max_samples:
        raise GridTooLarge(f"{dims} = {int(np.prod(dims))} samples exceeds cap {max_samples}")
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    values = gpis.query(pts, return_variance=(variance == "full"))
    mean = values.mean.reshape(dims)
    origin = region.min
    sp = np.broadcast_to(np.asarray(spacing, dtype=float), (3,))
    if variance == "full":
        var = values.variance.reshape(dims)
    else:
        var = _fill_variance(gpis, lambda idx: origin + idx * sp, mean, variance, iso)
    return VolumeGrid(origin, sp, mean, var)


def sample_volume_from_testset(gpis, pts, spacing, variance="surface", iso=0.0):
    """Scatter the column query set onto a lattice and evaluate the GPIS there.

    Every query point is snapped to its nearest lattice node; the GPIS is
    evaluated at those nodes only. Unsampled nodes above (or beside) the
    columns are marked +1 (outside); nodes directly below a column are -1,
    since the column brackets the surface and everything beneath it is
    material. Unsampled nodes carry the prior variance.
    """
    pts = as_points(pts)
    sp = np.broadcast_to(np.asarray(spacing, dtype=float), (3,)).copy()
    prior = gpis.kernel.sigma_e2
    if len(pts) == 0:
        return VolumeGrid(np.zeros(3), sp, np.ones((2, 2, 2)), np.full((2, 2, 2), prior))
    origin = pts.min(axis=0)
    idx = np.floor((pts - origin) / sp + 0.5).astype(int)
    dims = np.maximum(idx.max(axis=0) + 1, 2)
    sampled = np.zeros(dims, dtype=bool)
    sampled[idx[:, 0], idx[:, 1], idx[:, 2]] = True
    values = np.ones(dims)
    has = sampled.any(axis=2)
    kmin = np.argmax(sampled, axis=2)
    below = (np.arange(dims[2])[None, None, :] < kmin[:, :, None]) & has[:, :, None]
    values[below] = -1.0
    nodes = np.argwhere(sampled)
    values[sampled] = gpis.query(origin + nodes * sp, return_variance=False).mean
    var = np.full(dims, prior, dtype=float)
    if variance == "full":
        mask = sampled
    elif variance == "surface":
        mask = sampled & crossing_nodes(values, iso)
    elif variance == "none":
        mask = np.zeros(dims, dtype=bool)
    else:
        raise ValueError(f"unknown variance mode {variance!r}")
    if mask.any():
        var[mask] = gpis.query(origin + np.argwhere(mask) * sp).variance
    return VolumeGrid(origin, sp, values, var)


def marching_cubes(grid, iso=0.0):
    vals = grid.values
    finite = vals[np.isfinite(vals)]
    if finite.size == 0 or not (finite.min() <= iso <= finite.max()) or finite.min() == finite.max():
        return TriangleMesh.empty()
    try:
        verts, faces, _, _ = _sk_marching_cubes(vals, level=iso, method="lorensen", allow_degenerate=False)
    except (ValueError, RuntimeError):
        return TriangleMesh.empty()
    if len(faces) == 0:
        return TriangleMesh.empty()
    verts = verts.astype(float)
    idx, attrs = _refine(vals, grid.variances, verts, iso)
    pos = grid.origin + idx * grid.spacing
    faces = faces.astype(np.int64)
    a, b, c = pos[faces[:, 0]], pos[faces[:, 1]], pos[faces[:, 2]]
    keep = np.linalg.norm(np.cross(b - a, c - a), axis=1) > 0
    return TriangleMesh(pos, faces[keep], attrs)


def _refine(vals, var, verts, iso):
    """Recompute vertex index coordinates in float64 on their lattice edge."""
    n = len(verts)
    shape = np.array(vals.shape)
    rounded = np.rint(verts)
    frac = np.abs(verts - rounded)
    axis = np.argmax(frac, axis=1)
    rows = np.arange(n)
    base = rounded.astype(int)
    i0 = base.copy()
    i0[rows, axis] = np.clip(np.floor(verts[rows, axis]).astype(int), 0, shape[axis] - 2)
    i1 = i0.copy()
    i1[rows, axis] += 1
    i0 = np.clip(i0, 0, shape - 1)
    i1 = np.clip(i1, 0, shape - 1)
    f0 = vals[i0[:, 0], i0[:, 1], i0[:, 2]]
    f1 = vals[i1[:, 0], i1[:, 1], i1[:, 2]]
    ok = ((f0 - iso) * (f1 - iso) <= 0) & (f0 != f1)
    t = np.where(ok, (iso - f0) / np.where(f0 != f1, f1 - f0, 1.0), 0.0)
    out = verts.copy()
    out[ok] = i0[ok].astype(float)
    out[rows[ok], axis[ok]] += t[ok]
    v0 = var[i0[:, 0], i0[:, 1], i0[:, 2]]
    v1 = var[i1[:, 0], i1[:, 1], i1[:, 2]]
    attrs = (1 - t) * v0 + t * v1
    if np.any(~ok):
        attrs[~ok] = map_coordinates(var, out[~ok].T, order=1, mode="nearest")
    return out, attrs
