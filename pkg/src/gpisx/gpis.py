"""Gaussian process implicit surface over R^3.

Training targets follow the -1 / 0 / +1 convention (below / on / above the
surface) and are regressed, not classified. The initial training set is the
visible cloud labeled 0 plus ceil(N/5) copies of randomly chosen cloud
points shifted up by ``offset`` (+1) and ceil(N/5) shifted down (-1).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import gp
from .errors import EmptyCloud
from .geometry import PointCloud3, as_points
from .grf import MAX_POINTS, cap_points

__all__ = [
    "GPIS_KERNEL",
    "GPIS_NOISE_VAR",
    "OFF_SURFACE_OFFSET",
    "SurfaceLabel",
    "TactileBatch",
    "GpisModel",
    "build_gpis",
    "query_field",
    "add_tactile",
]

GPIS_KERNEL = gp.SquaredExponentialKernel(sigma_e2=1.0, sigma_w2=0.0025)
GPIS_NOISE_VAR = 1e-4
OFF_SURFACE_OFFSET = 0.05


class SurfaceLabel(enum.IntEnum):
    BELOW = -1
    ON = 0
    ABOVE = 1


@dataclass(frozen=True)
class TactileBatch:
    """Labeled 3D points produced by one probe motion."""

    points: np.ndarray
    labels: np.ndarray
    interaction_id: int = 0

    def __post_init__(self):
        pts = as_points(self.points)
        labels = np.asarray(self.labels).ravel()
        if len(pts) == 0:
            raise ValueError("a tactile batch must contain at least one point")
        if len(labels) != len(pts):
            raise ValueError(f"{len(pts)} points but {len(labels)} labels")
        if not np.all(np.isin(labels, (-1, 0, 1))):
            raise ValueError("labels must be -1, 0 or +1")
        pts.setflags(write=False)
        labels = labels.astype(np.int8)
        labels.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.labels)

    def counts(self):
        names = {1: "above", 0: "on", -1: "below"}
        return {names[k]: int(np.sum(self.labels == k)) for k in (1, 0, -1)}


@dataclass(frozen=True)
class GpisModel:
    gp: gp.GpModel
    rng_seed: int
    offset: float = OFF_SURFACE_OFFSET

    @property
    def kernel(self):
        return self.gp.kernel

    def query(self, pts, return_variance=True):
        return query_field(self, pts, return_variance=return_variance)


def gpis_training_set(points, seed, offset=OFF_SURFACE_OFFSET, noise_var=GPIS_NOISE_VAR):
    pts = as_points(points)
    n = len(pts)
    n_off = -(-n // 5)
    rng = np.random.default_rng(seed)
    above = pts[rng.choice(n, size=n_off, replace=False)].copy()
    below = pts[rng.choice(n, size=n_off, replace=False)].copy()
    above[:, 2] += offset
    below[:, 2] -= offset
    X = np.vstack([pts, above, below])
    y = np.concatenate([np.zeros(n), np.ones(n_off), -np.ones(n_off)])
    return gp.GpTrainingSet(X, y, noise_var)


def build_gpis(
    cloud,
    kernel=GPIS_KERNEL,
    noise_var=GPIS_NOISE_VAR,
    seed=0,
    offset=OFF_SURFACE_OFFSET,
    max_points=MAX_POINTS,
):
    pts = cloud.points if isinstance(cloud, PointCloud3) else as_points(cloud)
    if len(pts) == 0:
        raise EmptyCloud("GPIS needs at least one point")
    pts = pts[cap_points(pts, max_points, seed)]
    training = gpis_training_set(pts, seed, offset, noise_var)
    return GpisModel(gp.fit(kernel, training), int(seed), float(offset))


def query_field(model, pts, return_variance=True):
    return gp.predict(model.gp, as_points(pts), return_variance=return_variance)


def add_tactile(model, batch):
    """New snapshot conditioned on ``batch``; ``model`` is left untouched."""
    if not isinstance(batch, TactileBatch):
        raise TypeError("expected a TactileBatch")
    new = gp.extend(model.gp, batch.points, batch.labels.astype(float))
    return GpisModel(new, model.rng_seed, model.offset)
