"""Probabilistic surface exploration: GRF height field, GPIS and simulated touch."""

__version__ = "0.1.0"

from .classifier import QueryRegion, RegionAssessment, RegionLabel, assess_region, classify_region
from .errors import *  # noqa: F401,F403
from .explore import (
    ClassifierParams,
    ExplorationConfig,
    ExplorationLog,
    ExplorationStep,
    KernelParams,
    RoiParams,
    close_loop,
    explore,
    reconstruct_mesh,
    run_step,
)
from .geometry import Aabb3, PointCloud3, bounding_box, triangle_normal
from .gp import GpModel, GpPrediction, GpTrainingSet, SquaredExponentialKernel, extend, fit, kernel_eval, predict
from .gpis import GpisModel, SurfaceLabel, TactileBatch, add_tactile, build_gpis, query_field
from .grf import GrfModel, build_grf, query_heights
from .isosurface import TriangleMesh, VolumeGrid, marching_cubes, sample_volume, sample_volume_from_testset
from .probe import ProbeOutcome, ProbeParams, execute_probe, synthesize_tactile
from .roi import RoiTriangle, Triangle25, delaunay_25d, select_roi
from .scene import (
    CameraSpec,
    DropoutRegion,
    GroundTruthScene,
    ScenePrimitive,
    signed_height,
    surface_hit,
    synth_camera,
)
from .testset import TestsetParams, generate_subset
