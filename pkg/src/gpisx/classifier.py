"""Threshold labeling of query regions as hole / flat / object.

The reconstructed surface height is sampled on a 37-point hexagonal patch
inside each region. Per column, the height is where the GPIS mean crosses
zero below the free-space region above it; the mean height is compared with
the table height. Regions whose surface is still uncertain are ``unknown``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import OutOfBounds

__all__ = [
    "RegionLabel",
    "QueryRegion",
    "RegionAssessment",
    "hex_disc",
    "column_heights",
    "assess_region",
    "classify_region",
]

TAU_CLASS = 0.02
SCAN_DZ = 0.005
AIR_LEVEL = 0.25


class RegionLabel(str, enum.Enum):
    HOLE = "hole"
    FLAT = "flat"
    OBJECT = "object"
    UNKNOWN = "unknown"

    @property
    def short(self):
        return {"hole": "hole", "flat": "flat", "object": "obj", "unknown": "?"}[self.value]


@dataclass(frozen=True)
class QueryRegion:
    center: np.ndarray
    radius: float
    name: str = ""

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(2)
        if not self.radius > 0:
            raise ValueError("region radius must be positive")
        object.__setattr__(self, "center", c)

    def translated(self, offset_xy):
        return QueryRegion(self.center + np.asarray(offset_xy, dtype=float)[:2], self.radius, self.name)

    def to_dict(self):
        return {"name": self.name, "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True)
class RegionAssessment:
    label: RegionLabel
    mean_height: float
    mean_variance: float
    crossing_fraction: float

    def to_dict(self):
        return {
            "label": self.label.value,
            "mean_height": self.mean_height,
            "mean_variance": self.mean_variance,
            "crossing_fraction": self.crossing_fraction,
        }


def hex_disc(center, radius):
    """37 hex-lattice points (rings 0..3) inside the disc."""
    a = radius / 3.0
    pts = []
    for q in range(-3, 4):
        for r in range(-3, 4):
            if max(abs(q), abs(r), abs(q + r)) <= 3:
                pts.append((a * (q + 0.5 * r), a * (np.sqrt(3) / 2) * r))
    return np.asarray(center, dtype=float) + np.array(pts)


def _interp_level(z_hi, z_lo, m_hi, m_lo, level):
    if m_hi == m_lo:
        return z_lo
    return z_hi + (level - m_hi) * (z_lo - z_hi) / (m_lo - m_hi)


def column_heights(gpis, xy, z_top, z_bottom, dz=SCAN_DZ, air_level=AIR_LEVEL):
    """Surface height per xy column, NaN where the GPIS never shows free space.

    Scanning downwards, a column first has to enter free space (mean above
    ``air_level``); the surface is the next zero crossing of the mean. If
    the free space only fades out towards the prior without a crossing (no
    material sensed below, e.g. a probe that could not reach a hole floor),
    the surface is put where the mean drops back below ``air_level``.
    """
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    zs = np.arange(z_top, z_bottom - 1e-12, -dz)
    q = np.column_stack([np.repeat(xy, len(zs), axis=0), np.tile(zs, len(xy))])
    means = gpis.query(q, return_variance=False).mean.reshape(len(xy), len(zs))
    out = np.full(len(xy), np.nan)
    for i, m in enumerate(means):
        air = np.flatnonzero(m > air_level)
        if len(air) == 0:
            continue
        a = air[0]
        below = np.flatnonzero(m[a:] <= 0)
        if len(below):
            b = a + below[0]
            out[i] = _interp_level(zs[b - 1], zs[b], m[b - 1], m[b], 0.0)
            continue
        fade = np.flatnonzero(m[a:] < air_level)
        if len(fade):
            c = a + fade[0]
            out[i] = _interp_level(zs[c - 1], zs[c], m[c - 1], m[c], air_level)
        else:
            out[i] = zs[-1]
    return out


def assess_region(
    gpis,
    grf,
    region,
    bounds,
    base_z=0.0,
    tau_class=TAU_CLASS,
    var_max=None,
    dz=SCAN_DZ,
):
    """Label one region and report the numbers behind the label.

    ``grf`` is any height sampler with ``query(xy)``; it supplies the height
    for columns without a GPIS crossing. ``var_max`` defaults to half the
    GPIS signal variance; the variance is read at the column height, or at
    the hole threshold for columns deeper than that.
    """
    if var_max is None:
        var_max = 0.5 * gpis.kernel.sigma_e2
    lo = region.center - region.radius
    hi = region.center + region.radius
    if np.any(lo < bounds.min[:2] - 1e-9) or np.any(hi > bounds.max[:2] + 1e-9):
        raise OutOfBounds(f"region {region.name or region.center.tolist()} leaves the model bounds")
    xy = hex_disc(region.center, region.radius)
    h = column_heights(gpis, xy, bounds.max[2], bounds.min[2], dz)
    crossed = np.isfinite(h)
    if not crossed.all():
        h[~crossed] = grf.query(xy[~crossed]).mean
    # A hole label only needs free space down to the hole threshold, so hole
    # columns are judged by the variance there rather than at a floor the
    # probe may never have reached.
    z_gate = np.maximum(h, base_z - tau_class)
    var = gpis.query(np.column_stack([xy, z_gate])).variance
    h_mean = float(h.mean())
    v_mean = float(var.mean())
    if v_mean > var_max:
        label = RegionLabel.UNKNOWN
    elif h_mean < base_z - tau_class:
        label = RegionLabel.HOLE
    elif h_mean > base_z + tau_class:
        label = RegionLabel.OBJECT
    else:
        label = RegionLabel.FLAT
    return RegionAssessment(label, h_mean, v_mean, float(crossed.mean()))


def classify_region(gpis, grf, region, bounds, base_z=0.0, tau_class=TAU_CLASS, var_max=None, dz=SCAN_DZ):
    return assess_region(gpis, grf, region, bounds, base_z, tau_class, var_max, dz).label
