"""2.5D Gaussian random field: heights ``z = f(x, y)`` over the visible surface."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gp
from .geometry import Aabb3, PointCloud3, as_points, bounding_box
from .errors import EmptyCloud

__all__ = ["GRF_KERNEL", "GRF_NOISE_VAR", "MAX_POINTS", "GrfModel", "build_grf", "query_heights", "cap_points"]

GRF_KERNEL = gp.SquaredExponentialKernel(sigma_e2=0.01, sigma_w2=0.0025)
GRF_NOISE_VAR = 1e-6
MAX_POINTS = 6000


def cap_points(points, max_points, seed):
    """Stride-subsample ``points`` to at most ``max_points`` rows.

    The stride phase is drawn from ``seed`` so the result is reproducible.
    Returns the selected row indices.
    """
    n = len(points)
    if max_points is None or n <= max_points:
        return np.arange(n)
    stride = -(-n // max_points)
    offset = int(np.random.default_rng(seed).integers(stride))
    return np.arange(offset, n, stride)[:max_points]


@dataclass(frozen=True)
class GrfModel:
    gp: gp.GpModel
    source_bounds: Aabb3

    def query(self, xy, return_variance=True):
        return query_heights(self, xy, return_variance=return_variance)


def build_grf(cloud, kernel=GRF_KERNEL, noise_var=GRF_NOISE_VAR, max_points=MAX_POINTS, seed=0):
    """Fit the height field on the xy-projection of ``cloud``.

    Duplicate xy locations with different heights are kept: the noise term
    absorbs the conflict.
    """
    pts = cloud.points if isinstance(cloud, PointCloud3) else as_points(cloud)
    if len(pts) == 0:
        raise EmptyCloud("GRF needs at least one point")
    pts = pts[cap_points(pts, max_points, seed)]
    training = gp.GpTrainingSet(pts[:, :2], pts[:, 2], noise_var)
    return GrfModel(gp.fit(kernel, training), bounding_box(cloud))


def query_heights(model, xy, return_variance=True):
    xy = np.asarray(xy, dtype=float)
    if xy.ndim == 1:
        xy = xy.reshape(-1, 2)
    xy = as_points(xy[:, :2], dim=2)
    return gp.predict(model.gp, xy, return_variance=return_variance)
