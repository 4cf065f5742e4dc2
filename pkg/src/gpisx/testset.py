"""GPIS query set built from the height field.

Instead of a dense cube, each cell of a 2D grid gets a short vertical column
of query points centered on the height-field mean, with half-height
``m * variance + tau_v``. Columns are longer where the height field is
unsure, so the surface search concentrates there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TestsetParams", "grid_2d", "column_heights", "generate_subset", "dense_count"]


@dataclass(frozen=True)
class TestsetParams:
    __test__ = False  # keep pytest from collecting this class

    grid_size: tuple = (40, 40)
    m: float = 2.0
    tau_v: float = 0.02
    delta_y: float = 0.01

    def __post_init__(self):
        gs = tuple(int(g) for g in self.grid_size)
        if len(gs) != 2 or min(gs) < 1:
            raise ValueError(f"grid_size must be two positive integers, got {self.grid_size}")
        if not (self.m > 0 and self.tau_v > 0 and self.delta_y > 0):
            raise ValueError("m, tau_v and delta_y must be positive")
        object.__setattr__(self, "grid_size", gs)


def grid_2d(bounds, grid_size):
    """Regular xy grid over ``bounds``, x-major, shape ``(nx * ny, 2)``."""
    nx, ny = grid_size
    gx = np.linspace(bounds.min[0], bounds.max[0], nx)
    gy = np.linspace(bounds.min[1], bounds.max[1], ny)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def column_heights(mean, var, params):
    """Per-column start height and number of samples.

    Counts reproduce ``y = lo; while y < hi: y += delta_y`` with a small
    tolerance so that an exact multiple of ``delta_y`` does not produce an
    extra sample from round-off.
    """
    half = params.m * np.asarray(var) + params.tau_v
    lo = np.asarray(mean) - half
    counts = np.ceil(2.0 * half / params.delta_y - 1e-9).astype(int)
    return lo, np.maximum(counts, 0)


def generate_subset(grf, bounds, params=TestsetParams()):
    """Query points ``(x, y, z)`` for the GPIS.

    ``grf`` is anything with ``query(xy) -> GpPrediction`` (a GrfModel or a
    stub). Columns are emitted in grid order, each bottom-up. Points outside
    the z range of ``bounds`` are dropped: near vertical structure the height
    field can overshoot far beyond anything observed.
    """
    if not (bounds.max[0] > bounds.min[0] and bounds.max[1] > bounds.min[1]):
        raise ValueError("bounds are degenerate in xy")
    xy = grid_2d(bounds, params.grid_size)
    pred = grf.query(xy)
    lo, counts = column_heights(pred.mean, pred.variance, params)
    total = int(counts.sum())
    out = np.empty((total, 3))
    col = np.repeat(np.arange(len(xy)), counts)
    step = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    out[:, :2] = xy[col]
    out[:, 2] = lo[col] + step * params.delta_y
    keep = (out[:, 2] >= bounds.min[2]) & (out[:, 2] <= bounds.max[2])
    return out[keep]


def dense_count(points, params=TestsetParams()):
    """Size of the dense cube with the same xy grid and the same z span as ``points``."""
    if len(points) == 0:
        return 0
    span = points[:, 2].max() - points[:, 2].min()
    nz = int(np.floor(span / params.delta_y + 1e-9)) + 1
    return params.grid_size[0] * params.grid_size[1] * nz
