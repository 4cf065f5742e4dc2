"""Simulated fingertip probe.

The probe moves from above a target along the ROI approach vector in fixed
steps and stops on contact with the ground truth, when it leaves the
workspace, or when it has gone too far past the target (e.g. over a deep
hole). Tactile points are then synthesized as 4x4 grids: +1 along the
downsampled trajectory, and on contact a 0 grid on the surface plus a -1
copy pushed into the material.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidTarget
from .geometry import orthonormal_basis
from .gpis import TactileBatch
from .scene import cast_rays

__all__ = ["ProbeParams", "ProbeOutcome", "execute_probe", "synthesize_tactile", "tactile_grid"]

CONTACT = "contact"
WORKSPACE_LIMIT = "workspace_limit"
DIVERGED = "diverged"


@dataclass(frozen=True)
class ProbeParams:
    grid_side: int = 4
    grid_extent: float = 0.008
    step: float = 0.01
    below_offset: float = 0.005
    force_threshold: float = 1.0
    diverge_dist: float = 0.08
    start_clearance: float = 0.15
    downsample: int = 5

    def __post_init__(self):
        if self.grid_side != 4:
            raise ValueError("tactile grids are 4 x 4")
        for name in ("grid_extent", "step", "below_offset", "force_threshold", "diverge_dist", "start_clearance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.downsample < 1:
            raise ValueError("downsample must be >= 1")


@dataclass(frozen=True)
class ProbeOutcome:
    kind: str
    trajectory: np.ndarray
    approach: np.ndarray
    contact_point: np.ndarray | None = None
    contact_normal: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in (CONTACT, WORKSPACE_LIMIT, DIVERGED):
            raise ValueError(f"unknown outcome {self.kind!r}")
        has_contact = self.contact_point is not None and self.contact_normal is not None
        if has_contact != (self.kind == CONTACT):
            raise ValueError("contact fields must be set exactly for contact outcomes")

    def to_dict(self):
        return {
            "kind": self.kind,
            "contact_point": None if self.contact_point is None else self.contact_point.tolist(),
            "contact_normal": None if self.contact_normal is None else self.contact_normal.tolist(),
            "trajectory_len": len(self.trajectory),
        }


def execute_probe(scene, roi, params=ProbeParams()):
    """Move from ``start_clearance`` before the target along the approach.

    A start outside the workspace is allowed (steep approach vectors put it
    there); ``workspace_limit`` means leaving the bounds after being inside.
    """
    a = np.asarray(roi.approach, dtype=float)
    a = a / np.linalg.norm(a)
    target = np.asarray(roi.target, dtype=float)
    start = target - params.start_clearance * a
    if scene.is_inside(start[None])[0]:
        raise InvalidTarget(f"probe start {start.tolist()} lies inside the ground truth")
    traj = [start]
    p = start
    inside = bool(scene.bounds.contains(start)[0])
    max_steps = int(np.ceil((params.start_clearance + params.diverge_dist) / params.step)) + 2
    for _ in range(max_steps):
        t, nrm = cast_rays(scene, p[None], a[None])
        if t[0] <= params.step:
            contact = p + t[0] * a
            traj.append(contact)
            return ProbeOutcome(CONTACT, np.array(traj), a, contact, nrm[0])
        nxt = p + params.step * a
        nxt_inside = bool(scene.bounds.contains(nxt)[0])
        if inside and not nxt_inside:
            return ProbeOutcome(WORKSPACE_LIMIT, np.array(traj), a)
        inside = nxt_inside
        rel = nxt - target
        depth = rel @ a
        lateral = np.linalg.norm(rel - depth * a)
        if depth > params.diverge_dist or lateral > params.diverge_dist:
            return ProbeOutcome(DIVERGED, np.array(traj), a)
        traj.append(nxt)
        p = nxt
    return ProbeOutcome(DIVERGED, np.array(traj), a)


def tactile_grid(center, normal, params=ProbeParams()):
    """16 points on a square lattice of side ``grid_extent`` orthogonal to ``normal``."""
    u, v = orthonormal_basis(normal)
    ticks = np.linspace(-0.5, 0.5, params.grid_side) * params.grid_extent
    gu, gv = np.meshgrid(ticks, ticks, indexing="ij")
    return np.asarray(center, dtype=float) + gu.reshape(-1, 1) * u + gv.reshape(-1, 1) * v


def synthesize_tactile(outcome, params=ProbeParams(), interaction_id=0):
    """Labeled grids for one probe motion.

    Waypoints are every ``downsample``-th trajectory sample. On contact the
    final (contact) sample is not a waypoint, nor is any sample closer than
    one grid width to the contact, since the finger would already touch.
    """
    traj = outcome.trajectory
    idx = list(range(0, len(traj), params.downsample))
    if outcome.kind == CONTACT:
        idx = [
            i for i in idx
            if i != len(traj) - 1 and np.linalg.norm(traj[i] - outcome.contact_point) >= params.grid_extent
        ]
    pts, labels = [], []
    for i in idx:
        pts.append(tactile_grid(traj[i], outcome.approach, params))
        labels.append(np.ones(params.grid_side**2, dtype=int))
    if outcome.kind == CONTACT:
        on = tactile_grid(outcome.contact_point, outcome.contact_normal, params)
        pts += [on, on - params.below_offset * outcome.contact_normal]
        labels += [np.zeros(len(on), dtype=int), -np.ones(len(on), dtype=int)]
    return TactileBatch(np.vstack(pts), np.concatenate(labels), interaction_id)
