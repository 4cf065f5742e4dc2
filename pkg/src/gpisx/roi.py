"""Region-of-interest selection on the 2.5D Delaunay triangulation of the cloud.

Large triangles mark empty spaces in the visible cloud; their barycenters are
ranked by the height-field variance and the most uncertain ones become probe
targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.sparse import coo_matrix
from scipy.spatial import cKDTree

from .delaunay import delaunay_2d
from .errors import DegenerateInput, DegenerateTriangle, NoCandidates
from .geometry import PointCloud3, as_points, triangle_normal

__all__ = [
    "DEDUP_EPS",
    "MIN_AREA",
    "MAX_TARGETS",
    "Triangle25",
    "RoiTriangle",
    "dedupe_xy",
    "delaunay_25d",
    "select_roi",
]

DEDUP_EPS = 1e-6
MIN_AREA = 4e-4
MAX_TARGETS = 8


@dataclass(frozen=True)
class Triangle25:
    vertices: np.ndarray  # (3, 3); xy define the triangle, z carried along

    @property
    def barycenter(self):
        return self.vertices.mean(axis=0)

    @property
    def area_xy(self):
        (ax, ay), (bx, by), (cx, cy) = self.vertices[:, :2]
        return 0.5 * abs((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))


@dataclass(frozen=True)
class RoiTriangle:
    triangle: Triangle25
    variance: float
    approach: np.ndarray
    target: np.ndarray

    @property
    def barycenter(self):
        return self.triangle.barycenter

    def to_dict(self):
        return {
            "vertices": self.triangle.vertices.tolist(),
            "barycenter": self.barycenter.tolist(),
            "area_xy": self.triangle.area_xy,
            "variance": self.variance,
            "approach": self.approach.tolist(),
            "target": self.target.tolist(),
        }


def dedupe_xy(points, eps=DEDUP_EPS):
    """Merge sites closer than ``eps`` in xy, keeping the highest one.

    Groups keep the order of their first member.
    """
    pts = as_points(points)
    if len(pts) < 2:
        return pts
    pairs = cKDTree(pts[:, :2]).query_pairs(eps, output_type="ndarray")
    if len(pairs) == 0:
        return pts
    n = len(pts)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, group = connected_components(graph, directed=False)
    first = {}
    best = {}
    for i, g in enumerate(group):
        first.setdefault(g, i)
        if g not in best or pts[i, 2] > pts[best[g], 2]:
            best[g] = i
    keep = [best[g] for g in sorted(first, key=first.get)]
    return pts[keep]


def delaunay_25d(cloud):
    """Triangulate the xy-projection of ``cloud``; z values ride along."""
    pts = cloud.points if isinstance(cloud, PointCloud3) else as_points(cloud)
    pts = dedupe_xy(pts)
    if len(pts) < 3:
        raise DegenerateInput(f"need at least 3 distinct xy sites, got {len(pts)}")
    tris = delaunay_2d(pts[:, :2])
    return [Triangle25(pts[t]) for t in tris]


def select_roi(triangles, grf, min_area=MIN_AREA, max_targets=MAX_TARGETS, z_range=None):
    """Rank large triangles by height-field variance at their barycenters.

    Ties in variance go to the larger triangle, then to the lexicographically
    smaller barycenter. Targets take the height-field mean as z and the
    approach vector is the inward (downward) triangle normal. ``z_range``
    optionally clips target heights, since the height field can overshoot
    badly inside wide gaps next to steps.
    """
    if min_area < 0:
        raise ValueError("min_area must be >= 0")
    if max_targets < 1:
        raise ValueError("max_targets must be >= 1")
    cands = [t for t in triangles if t.area_xy >= min_area]
    if not cands:
        raise NoCandidates(f"no triangle with area >= {min_area}")
    bary = np.array([t.barycenter for t in cands])
    pred = grf.query(bary[:, :2])
    order = sorted(
        range(len(cands)),
        key=lambda i: (-pred.variance[i], -cands[i].area_xy, tuple(bary[i])),
    )
    out = []
    for i in order:
        if len(out) == max_targets:
            break
        tri = cands[i]
        try:
            approach = triangle_normal(*tri.vertices, inward=True)
        except DegenerateTriangle:
            continue
        z = pred.mean[i] if z_range is None else float(np.clip(pred.mean[i], *z_range))
        target = np.array([bary[i, 0], bary[i, 1], z])
        out.append(RoiTriangle(tri, float(pred.variance[i]), approach, target))
    return out
