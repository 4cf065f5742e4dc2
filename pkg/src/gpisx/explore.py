"""One exploration step: vision-only models, ROI probing, GPIS updates, meshing.

The step runs in the calling thread. Other threads may call
:meth:`ExplorationStep.snapshot` to read the latest published model pair or
:meth:`ExplorationStep.interrupt` to stop after the interaction in flight.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import gp
from .classifier import assess_region
from .errors import EmptyMesh, InvalidTarget, NoCandidates, StaleHandle
from .geometry import Aabb3, PointCloud3
from .gpis import GPIS_NOISE_VAR, OFF_SURFACE_OFFSET, add_tactile, build_gpis
from .grf import GRF_NOISE_VAR, MAX_POINTS, build_grf
from .isosurface import TriangleMesh, marching_cubes, sample_volume_from_testset
from .probe import ProbeParams, execute_probe, synthesize_tactile
from .roi import MAX_TARGETS, MIN_AREA, delaunay_25d, select_roi
from .testset import TestsetParams, dense_count, generate_subset

__all__ = [
    "KernelParams",
    "RoiParams",
    "ClassifierParams",
    "ExplorationConfig",
    "Snapshot",
    "ExplorationLog",
    "ExplorationStep",
    "reconstruct_mesh",
    "run_step",
    "close_loop",
    "explore",
]


@dataclass(frozen=True)
class KernelParams:
    sigma_e2: float
    sigma_w2: float
    noise_var: float
    max_points: int = MAX_POINTS

    def __post_init__(self):
        if not (self.sigma_e2 > 0 and self.sigma_w2 > 0 and self.noise_var >= 0):
            raise ValueError("kernel parameters must be positive (noise_var >= 0)")
        if self.max_points < 1:
            raise ValueError("max_points must be >= 1")

    @property
    def kernel(self):
        return gp.SquaredExponentialKernel(self.sigma_e2, self.sigma_w2)


def _grf_default():
    return KernelParams(0.01, 0.0025, GRF_NOISE_VAR)


def _gpis_default():
    return KernelParams(1.0, 0.0025, GPIS_NOISE_VAR)


@dataclass(frozen=True)
class RoiParams:
    min_area: float = MIN_AREA
    max_targets: int = MAX_TARGETS

    def __post_init__(self):
        if self.min_area < 0 or self.max_targets < 1:
            raise ValueError("min_area must be >= 0 and max_targets >= 1")


@dataclass(frozen=True)
class ClassifierParams:
    base_z: float = 0.0
    tau_class: float = 0.02
    var_max: float | None = None
    dz: float = 0.005
    regions: tuple = ()

    def __post_init__(self):
        if not (self.tau_class >= 0 and self.dz > 0):
            raise ValueError("tau_class must be >= 0 and dz > 0")
        object.__setattr__(self, "regions", tuple(self.regions))


@dataclass(frozen=True)
class ExplorationConfig:
    grf: KernelParams = field(default_factory=_grf_default)
    gpis: KernelParams = field(default_factory=_gpis_default)
    off_surface_offset: float = OFF_SURFACE_OFFSET
    roi: RoiParams = field(default_factory=RoiParams)
    probe: ProbeParams = field(default_factory=ProbeParams)
    testset: TestsetParams = field(default_factory=TestsetParams)
    classifier: ClassifierParams = field(default_factory=ClassifierParams)
    iterations: int = 1
    seed: int = 0
    mesh_each_interaction: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.off_surface_offset > 0:
            raise ValueError("off_surface_offset must be positive")


@dataclass(frozen=True)
class Snapshot:
    """A published (GRF, GPIS) pair; ``id`` grows by one per publication."""

    id: int
    grf: object
    gpis: object


@dataclass
class ExplorationLog:
    config: ExplorationConfig
    n_cloud: int
    rois: list
    interactions: list
    pre_labels: dict
    final_labels: dict
    pre_details: dict
    final_details: dict
    snapshot_ids: list
    testset_size: int
    dense_size: int
    interrupted: bool
    mesh: TriangleMesh | None = field(default=None, repr=False)
    meshes: list = field(default_factory=list, repr=False)
    final: Snapshot | None = field(default=None, repr=False)
    wall_time_s: float = 0.0

    def to_dict(self, include_timing=True):
        out = {
            "n_cloud": self.n_cloud,
            "rois": self.rois,
            "interactions": [
                r if include_timing else {k: v for k, v in r.items() if k != "wall_time_s"}
                for r in self.interactions
            ],
            "pre_labels": self.pre_labels,
            "final_labels": self.final_labels,
            "pre_details": self.pre_details,
            "final_details": self.final_details,
            "snapshot_ids": self.snapshot_ids,
            "testset_size": self.testset_size,
            "dense_size": self.dense_size,
            "interrupted": self.interrupted,
            "mesh": None if self.mesh is None else {"vertices": len(self.mesh.vertices), "triangles": len(self.mesh)},
        }
        if include_timing:
            out["wall_time_s"] = self.wall_time_s
        return out


def reconstruct_mesh(grf, gpis, testset=TestsetParams(), z_range=None):
    """Mesh the GPIS on the height-field query set.

    Returns ``(query_points, mesh)``. The query grid spans the xy extent of
    the cloud; query columns are kept inside ``z_range`` (the workspace
    heights), which defaults to the z extent of the cloud. The lattice
    matches the query grid in xy and uses ``delta_y`` in z; variances are
    computed on the surface only.
    """
    src = grf.source_bounds
    if z_range is None:
        z_range = (src.min[2], src.max[2])
    bounds = Aabb3([src.min[0], src.min[1], z_range[0]], [src.max[0], src.max[1], z_range[1]])
    pts = generate_subset(grf, bounds, testset)
    ext = grf.source_bounds.extent
    spacing = (
        ext[0] / max(testset.grid_size[0] - 1, 1),
        ext[1] / max(testset.grid_size[1] - 1, 1),
        testset.delta_y,
    )
    grid = sample_volume_from_testset(gpis, pts, spacing, variance="surface")
    return pts, marching_cubes(grid)


class ExplorationStep:
    """Single-writer exploration step with concurrent snapshot readers.

    ``on_publish(step, snapshot)`` is called in the writer thread right
    after each publication; tests use it to interrupt deterministically.
    """

    def __init__(self, cloud, scene, cfg=None, on_publish=None):
        if not isinstance(cloud, PointCloud3):
            cloud = PointCloud3(cloud)
        if len(cloud) == 0:
            raise ValueError("exploration needs a non-empty cloud")
        self.cloud = cloud
        self.scene = scene
        self.cfg = cfg or ExplorationConfig()
        self.on_publish = on_publish
        self._lock = threading.Lock()
        self._current = None
        self._published = threading.Event()
        self._interrupt = threading.Event()
        self._closed = False
        self.log = None

    # reader side -----------------------------------------------------------

    def snapshot(self, timeout=None):
        """Latest published snapshot; waits for the first one if needed."""
        if self._closed:
            raise StaleHandle("exploration step has been closed")
        if not self._published.wait(timeout):
            raise TimeoutError("no snapshot published yet")
        with self._lock:
            return self._current

    def interrupt(self):
        if self._closed:
            raise StaleHandle("exploration step has been closed")
        self._interrupt.set()
        return True

    def close(self):
        self._closed = True

    # writer side -----------------------------------------------------------

    def _publish(self, grf, gpis):
        with self._lock:
            sid = 0 if self._current is None else self._current.id + 1
            snap = Snapshot(sid, grf, gpis)
            self._current = snap
        self._published.set()
        if self.on_publish is not None:
            self.on_publish(self, snap)
        return snap

    def _assess_all(self, gpis, grf):
        c = self.cfg.classifier
        out = {}
        for i, region in enumerate(c.regions):
            name = region.name or f"region_{i}"
            out[name] = assess_region(gpis, grf, region, self.scene.bounds, c.base_z, c.tau_class, c.var_max, c.dz)
        return out

    def _mesh(self, grf, gpis):
        b = self.scene.bounds
        return reconstruct_mesh(grf, gpis, self.cfg.testset, (b.min[2], b.max[2]))

    def run(self):
        if self._closed:
            raise StaleHandle("exploration step has been closed")
        cfg = self.cfg
        t_start = time.perf_counter()
        grf = build_grf(self.cloud, cfg.grf.kernel, cfg.grf.noise_var, cfg.grf.max_points, cfg.seed)
        gpis = build_gpis(
            self.cloud, cfg.gpis.kernel, cfg.gpis.noise_var, cfg.seed, cfg.off_surface_offset, cfg.gpis.max_points
        )
        snap = self._publish(grf, gpis)
        snapshot_ids = [snap.id]

        pre = self._assess_all(gpis, grf)

        bounds = grf.source_bounds
        try:
            rois = select_roi(
                delaunay_25d(self.cloud), grf, cfg.roi.min_area, cfg.roi.max_targets,
                z_range=(bounds.min[2], bounds.max[2]),
            )
        except NoCandidates:
            rois = []
        targets = np.array([r.target for r in rois]).reshape(-1, 3)
        target_var = gpis.query(targets).variance.tolist() if len(rois) else []

        records = []
        meshes = []
        for i, roi in enumerate(rois):
            if self._interrupt.is_set():
                break
            t0 = time.perf_counter()
            rec = {"index": i, "roi": roi.to_dict()}
            try:
                outcome = execute_probe(self.scene, roi, cfg.probe)
            except InvalidTarget as e:
                rec.update(status="skipped", reason=str(e), wall_time_s=time.perf_counter() - t0)
                records.append(rec)
                continue
            batch = synthesize_tactile(outcome, cfg.probe, interaction_id=i)
            var_before = float(gpis.query(batch.points).variance.mean())
            gpis = add_tactile(gpis, batch)
            var_after = float(gpis.query(batch.points).variance.mean())
            target_var_after = gpis.query(targets).variance.tolist()
            if cfg.mesh_each_interaction:
                meshes.append(self._mesh(grf, gpis)[1])
            snap = self._publish(grf, gpis)
            snapshot_ids.append(snap.id)
            rec.update(
                status="ok",
                outcome=outcome.to_dict(),
                batch_size=len(batch),
                batch_counts=batch.counts(),
                batch_var_before=var_before,
                batch_var_after=var_after,
                target_var_before=target_var,
                target_var_after=target_var_after,
                snapshot_id=snap.id,
                batch={"points": batch.points.tolist(), "labels": batch.labels.tolist()},
                wall_time_s=time.perf_counter() - t0,
            )
            target_var = target_var_after
            records.append(rec)

        test_pts, mesh = self._mesh(grf, gpis)
        final = self._assess_all(gpis, grf)
        self.log = ExplorationLog(
            config=cfg,
            n_cloud=len(self.cloud),
            rois=[r.to_dict() for r in rois],
            interactions=records,
            pre_labels={k: a.label.value for k, a in pre.items()},
            final_labels={k: a.label.value for k, a in final.items()},
            pre_details={k: a.to_dict() for k, a in pre.items()},
            final_details={k: a.to_dict() for k, a in final.items()},
            snapshot_ids=snapshot_ids,
            testset_size=len(test_pts),
            dense_size=dense_count(test_pts, cfg.testset),
            interrupted=self._interrupt.is_set(),
            mesh=mesh,
            meshes=meshes,
            final=self._current,
            wall_time_s=time.perf_counter() - t_start,
        )
        return self.log


def run_step(cloud, scene, cfg=None, on_publish=None):
    return ExplorationStep(cloud, scene, cfg, on_publish).run()


def close_loop(log, cfg=None):
    """Vertices of the final mesh as the cloud for the next step.

    Only vertices whose GPIS variance passes the classifier gate
    (``var_max``, by default half the signal variance) are kept: far from
    any data the mean drifts to 0 and produces surface where nothing is
    known.
    """
    cfg = cfg or log.config
    if log.mesh is None or len(log.mesh.vertices) == 0:
        raise EmptyMesh("final mesh is empty; nothing to loop back")
    var_max = cfg.classifier.var_max
    if var_max is None:
        var_max = 0.5 * cfg.gpis.sigma_e2
    keep = log.mesh.vertex_attrs <= var_max
    if not keep.any():
        raise EmptyMesh("no mesh vertex is certain enough to loop back")
    return PointCloud3(log.mesh.vertices[keep], frame="world")


def explore(cloud, scene, cfg=None):
    """Run ``cfg.iterations`` steps, feeding each step's mesh into the next."""
    cfg = cfg or ExplorationConfig()
    logs = []
    for _ in range(cfg.iterations):
        log = run_step(cloud, scene, cfg)
        logs.append(log)
        if len(logs) < cfg.iterations:
            cloud = close_loop(log, cfg)
    return logs
