"""Analytic ground-truth scenes and a synthetic depth camera.

A scene is a table top (``base_plane``) with rectangular pits (``hole``),
solid or open-topped boxes and spheres, all axis-aligned. Internally every
primitive is reduced to a union of convex solids (boxes and spheres) so that
ray casting is a min over per-solid entry distances.

Conventions for ``ScenePrimitive.center``:

* ``base_plane``: only ``center[2]`` matters, it is the table height.
* ``hole``: center of the opening; the pit goes ``depth`` below the table.
* ``box_full`` / ``box_empty_top_open``: center of the bounding volume.
* ``sphere``: the sphere center.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfBounds
from .geometry import Aabb3, PointCloud3, as_points

__all__ = [
    "KINDS",
    "ScenePrimitive",
    "GroundTruthScene",
    "DropoutRegion",
    "CameraSpec",
    "default_camera",
    "signed_height",
    "surface_hit",
    "cast_rays",
    "synth_camera",
]

KINDS = ("base_plane", "hole", "box_full", "box_empty_top_open", "sphere")
_DIMS = {"base_plane": (0, 0), "hole": (3, 3), "box_full": (3, 3), "box_empty_top_open": (3, 4), "sphere": (1, 1)}
OPEN_BOX_WALL = 0.005
_FAR = 10.0  # table slab reaches this far past the bounds so rays never see its rim
_SLAB = 1.0


@dataclass(frozen=True)
class ScenePrimitive:
    kind: str
    center: np.ndarray
    dims: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown primitive kind {self.kind!r}")
        c = np.asarray(self.center, dtype=float).reshape(3)
        dims = tuple(float(d) for d in self.dims)
        lo, hi = _DIMS[self.kind]
        if not lo <= len(dims) <= hi:
            raise ValueError(f"{self.kind} takes {lo}..{hi} dims, got {len(dims)}")
        if any(not d > 0 for d in dims):
            raise ValueError(f"{self.kind} dims must be positive, got {dims}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "dims", dims)

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(), "dims": list(self.dims)}


@dataclass(frozen=True)
class DropoutRegion:
    """xy rectangle ``(xmin, ymin, xmax, ymax)`` where the camera returns nothing."""

    footprint: tuple
    cause: str = "reflective"

    def __post_init__(self):
        fp = tuple(float(v) for v in self.footprint)
        if len(fp) != 4 or fp[0] >= fp[2] or fp[1] >= fp[3]:
            raise ValueError(f"bad dropout rectangle {self.footprint}")
        if self.cause not in ("reflective", "occlusion"):
            raise ValueError(f"unknown dropout cause {self.cause!r}")
        object.__setattr__(self, "footprint", fp)

    def contains_xy(self, xy):
        xy = np.atleast_2d(xy)
        x0, y0, x1, y1 = self.footprint
        return (xy[:, 0] >= x0) & (xy[:, 0] <= x1) & (xy[:, 1] >= y0) & (xy[:, 1] <= y1)

    def to_dict(self):
        return {"rect": list(self.footprint), "cause": self.cause}


@dataclass(frozen=True)
class GroundTruthScene:
    primitives: tuple
    bounds: Aabb3
    seed: int = 0
    _boxes: np.ndarray = field(init=False, repr=False, compare=False)
    _spheres: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        prims = tuple(self.primitives)
        object.__setattr__(self, "primitives", prims)
        planes = [p for p in prims if p.kind == "base_plane"]
        if len(planes) != 1:
            raise ValueError(f"a scene needs exactly one base_plane, got {len(planes)}")
        for p in prims:
            if p.kind == "base_plane":
                continue
            lo, hi = _footprint(p, self.plane_z)
            if np.any(lo < self.bounds.min - 1e-9) or np.any(hi > self.bounds.max + 1e-9):
                raise ValueError(f"{p.kind} at {p.center.tolist()} leaves the scene bounds")
        boxes, spheres = _solids(prims, self.bounds, self.plane_z)
        object.__setattr__(self, "_boxes", boxes)
        object.__setattr__(self, "_spheres", spheres)

    @property
    def plane_z(self):
        return float(next(p for p in self.primitives if p.kind == "base_plane").center[2])

    def translated(self, offset_xy):
        off = np.array([offset_xy[0], offset_xy[1], 0.0])
        prims = [ScenePrimitive(p.kind, p.center + (off if p.kind != "base_plane" else 0), p.dims) for p in self.primitives]
        return GroundTruthScene(prims, self.bounds.translated(off), self.seed)

    def is_inside(self, pts, tol=0.0):
        """True where a point lies strictly inside solid material (shrunk by ``tol``)."""
        pts = as_points(pts)
        inside = np.zeros(len(pts), dtype=bool)
        for lo, hi in self._boxes:
            inside |= np.all((pts > lo + tol) & (pts < hi - tol), axis=1)
        for cx, cy, cz, r in self._spheres:
            inside |= np.linalg.norm(pts - (cx, cy, cz), axis=1) < r - tol
        return inside

    def to_dict(self):
        return {
            "bounds": self.bounds.to_dict(),
            "seed": self.seed,
            "primitives": [p.to_dict() for p in self.primitives],
        }


def _footprint(p, plane_z):
    c, d = p.center, p.dims
    if p.kind == "hole":
        half = np.array([d[0], d[1], 0]) / 2
        return c - half - [0, 0, d[2]], c + half
    if p.kind == "sphere":
        return c - d[0], c + d[0]
    half = np.array(d[:3]) / 2
    return c - half, c + half


def _solids(prims, bounds, plane_z):
    """Decompose the scene into ``(lo, hi)`` boxes and ``(x, y, z, r)`` spheres."""
    boxes = []
    holes = [p for p in prims if p.kind == "hole"]
    xs = {bounds.min[0] - _FAR, bounds.max[0] + _FAR}
    ys = {bounds.min[1] - _FAR, bounds.max[1] + _FAR}
    for h in holes:
        (x0, y0, _), (x1, y1, _) = _footprint(h, plane_z)
        xs.update((x0, x1))
        ys.update((y0, y1))
    xs, ys = sorted(xs), sorted(ys)
    bottom = bounds.min[2] - _SLAB
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            mx, my = 0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])
            top = plane_z
            for h in holes:
                (x0, y0, _), (x1, y1, _) = _footprint(h, plane_z)
                if x0 < mx < x1 and y0 < my < y1:
                    top = min(top, plane_z - h.dims[2])
            boxes.append(((xs[i], ys[j], bottom), (xs[i + 1], ys[j + 1], top)))
    spheres = []
    for p in prims:
        if p.kind == "box_full":
            boxes.append(tuple(map(tuple, _footprint(p, plane_z))))
        elif p.kind == "box_empty_top_open":
            (x0, y0, z0), (x1, y1, z1) = _footprint(p, plane_z)
            t = p.dims[3] if len(p.dims) > 3 else OPEN_BOX_WALL
            boxes += [
                ((x0, y0, z0), (x1, y1, z0 + t)),
                ((x0, y0, z0), (x0 + t, y1, z1)),
                ((x1 - t, y0, z0), (x1, y1, z1)),
                ((x0, y0, z0), (x1, y0 + t, z1)),
                ((x0, y1 - t, z0), (x1, y1, z1)),
            ]
        elif p.kind == "sphere":
            spheres.append((*p.center, p.dims[0]))
    return np.array(boxes, dtype=float).reshape(-1, 2, 3), np.array(spheres, dtype=float).reshape(-1, 4)


def signed_height(scene, xy):
    """Top-surface height at each xy (scalar in, scalar out)."""
    scalar = np.ndim(xy) == 1
    xy = np.atleast_2d(np.asarray(xy, dtype=float))[:, :2]
    if not np.all(scene.bounds.contains_xy(xy, tol=1e-9)):
        raise OutOfBounds("query xy outside scene bounds")
    h = np.full(len(xy), -np.inf)
    for lo, hi in scene._boxes:
        m = np.all((xy >= lo[:2]) & (xy <= hi[:2]), axis=1)
        h[m] = np.maximum(h[m], hi[2])
    for cx, cy, cz, r in scene._spheres:
        d2 = (xy[:, 0] - cx) ** 2 + (xy[:, 1] - cy) ** 2
        m = d2 < r * r
        h[m] = np.maximum(h[m], cz + np.sqrt(r * r - d2[m]))
    return float(h[0]) if scalar else h


def cast_rays(scene, origins, dirs):
    """First intersection of each ray with the scene solids.

    Returns ``(t, normals)``; ``t`` is ``inf`` where nothing is hit. Rays
    starting inside a solid report ``t = 0`` with a zero normal.
    """
    O = np.atleast_2d(np.asarray(origins, dtype=float))
    D = np.atleast_2d(np.asarray(dirs, dtype=float))
    O, D = np.broadcast_arrays(O, D)
    n = len(O)
    best = np.full(n, np.inf)
    normals = np.zeros((n, 3))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inv = 1.0 / D
        for lo, hi in scene._boxes:
            t1 = (lo - O) * inv
            t2 = (hi - O) * inv
            tnear = np.minimum(t1, t2)
            tfar = np.maximum(t1, t2)
            flat = D == 0
            inside_slab = (O >= lo) & (O <= hi)
            tnear[flat] = np.where(inside_slab[flat], -np.inf, np.inf)
            tfar[flat] = np.where(inside_slab[flat], np.inf, -np.inf)
            axis = np.argmax(tnear, axis=1)
            t_in = tnear[np.arange(n), axis]
            t_out = tfar.min(axis=1)
            hit = (t_in <= t_out) & (t_out >= 0)
            t_hit = np.where(t_in >= 0, t_in, 0.0)
            better = hit & (t_hit < best)
            if np.any(better):
                best[better] = t_hit[better]
                nrm = np.zeros((n, 3))
                rows = np.arange(n)
                nrm[rows, axis] = -np.sign(D[rows, axis])
                nrm[t_in < 0] = 0.0
                normals[better] = nrm[better]
        for cx, cy, cz, r in scene._spheres:
            oc = O - (cx, cy, cz)
            dd = np.einsum("ij,ij->i", D, D)
            b = np.einsum("ij,ij->i", D, oc) / dd
            c = (np.einsum("ij,ij->i", oc, oc) - r * r) / dd
            disc = b * b - c
            ok = disc >= 0
            sq = np.sqrt(np.where(ok, disc, 0.0))
            t0 = -b - sq
            t1 = -b + sq
            hit = ok & (t1 >= 0)
            t_hit = np.where(t0 >= 0, t0, 0.0)
            better = hit & (t_hit < best)
            if np.any(better):
                best[better] = t_hit[better]
                p = O + t_hit[:, None] * D
                nrm = (p - (cx, cy, cz)) / r
                nrm[t0 < 0] = 0.0
                normals[better] = nrm[better]
    return best, normals


def surface_hit(scene, origin, direction):
    """First hit ``(point, outward_normal)`` or ``None`` if the ray leaves the bounds."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    o = np.asarray(origin, dtype=float)
    t, nrm = cast_rays(scene, o[None], d[None])
    if not np.isfinite(t[0]):
        return None
    p = o + t[0] * d
    if not scene.bounds.contains(p, tol=1e-9)[0]:
        return None
    return p, nrm[0]


@dataclass(frozen=True)
class CameraSpec:
    """Pinhole depth camera looking along +y, pitched down by ``pitch_deg``.

    ``position=None`` places the camera so that its optical axis hits the
    center of the table, ``height`` above it.
    """

    position: np.ndarray | None = None
    pitch_deg: float = 35.0
    resolution: tuple = (160, 120)
    noise_sigma: float = 0.003
    fov_deg: tuple = (58.0, 45.0)
    height: float = 0.6

    def resolved_position(self, scene):
        if self.position is not None:
            return np.asarray(self.position, dtype=float)
        c = scene.bounds.center
        back = self.height / np.tan(np.radians(self.pitch_deg))
        return np.array([c[0], c[1] - back, scene.plane_z + self.height])

    def rays(self, scene):
        """Ray origin and unit directions, row-major over the image."""
        pitch = np.radians(self.pitch_deg)
        fwd = np.array([0.0, np.cos(pitch), -np.sin(pitch)])
        right = np.array([1.0, 0.0, 0.0])
        up = np.cross(right, fwd)
        w, h = self.resolution
        tx = np.tan(np.radians(self.fov_deg[0]) / 2) * np.linspace(-1, 1, w)
        ty = np.tan(np.radians(self.fov_deg[1]) / 2) * np.linspace(1, -1, h)
        gx, gy = np.meshgrid(tx, ty)
        d = fwd + gx.reshape(-1, 1) * right + gy.reshape(-1, 1) * up
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return self.resolved_position(scene), d


def default_camera():
    return CameraSpec()


def synth_camera(scene, camera=None, dropouts=(), rng=None):
    """Ray-cast depth image back-projected to world points inside the bounds.

    Depth noise is Gaussian along each ray, truncated at three sigma, and
    drawn from ``scene.seed`` unless an explicit generator is given. A pixel
    is discarded when its true hit or its noisy point falls in a dropout
    rectangle, so no returned point lies inside one.
    """
    camera = camera or default_camera()
    origin, dirs = camera.rays(scene)
    t, _ = cast_rays(scene, origin[None], dirs)
    ok = np.isfinite(t)
    hits = origin + t[:, None] * dirs
    ok &= scene.bounds.contains(np.where(ok[:, None], hits, 0.0), tol=1e-9)
    rng = np.random.default_rng(scene.seed) if rng is None else rng
    noise = np.zeros(len(t))
    if camera.noise_sigma > 0:
        # truncated at 3 sigma so every point is within 3 sigma of the surface
        noise = np.clip(rng.normal(0.0, camera.noise_sigma, size=len(t)), -3 * camera.noise_sigma, 3 * camera.noise_sigma)
    pts = origin + (t + noise)[:, None] * dirs
    for region in dropouts:
        ok &= ~region.contains_xy(hits) & ~region.contains_xy(np.where(ok[:, None], pts, 0.0))
    return PointCloud3(pts[ok], frame="world")
