"""JSON scene/config/region documents and the packaged scenarios.

Documents are checked against the schemas shipped in ``gpisx/schemas``
before conversion; unknown fields are rejected. ``GPISX_SEED`` in the
environment overrides the seed of both scene and exploration documents.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import jsonschema
from referencing import Registry, Resource

from .classifier import QueryRegion
from .errors import ConfigError
from .explore import ClassifierParams, ExplorationConfig, KernelParams, RoiParams
from .geometry import Aabb3
from .grf import GRF_NOISE_VAR, MAX_POINTS
from .gpis import GPIS_NOISE_VAR, OFF_SURFACE_OFFSET
from .probe import ProbeParams
from .scene import CameraSpec, DropoutRegion, GroundTruthScene, ScenePrimitive
from .testset import TestsetParams

__all__ = [
    "SEED_ENV",
    "SceneConfig",
    "load_schema",
    "validate",
    "scene_from_dict",
    "scene_to_dict",
    "config_from_dict",
    "config_to_dict",
    "regions_from_dict",
    "load_json",
    "load_scene",
    "load_config",
    "load_regions",
    "scenario_names",
    "scenario_path",
]

SEED_ENV = "GPISX_SEED"
SCHEMAS = ("scene", "config", "regions", "log")


@lru_cache(maxsize=None)
def load_schema(name):
    text = resources.files("gpisx").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


@lru_cache(maxsize=None)
def _validator(name):
    registry = Registry().with_resources(
        (f"{s}.schema.json", Resource.from_contents(load_schema(s))) for s in SCHEMAS
    )
    schema = load_schema(name)
    cls = jsonschema.validators.validator_for(schema)
    return cls(schema, registry=registry)


def validate(doc, kind):
    """Raise ConfigError describing the first schema violation, if any."""
    err = jsonschema.exceptions.best_match(_validator(kind).iter_errors(doc))
    if err is not None:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{kind} document invalid at {where}: {err.message}")


def _env_seed(seed):
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return seed
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


# scenes ----------------------------------------------------------------------


@dataclass(frozen=True)
class SceneConfig:
    scene: GroundTruthScene
    camera: CameraSpec = field(default_factory=CameraSpec)
    dropouts: tuple = ()
    name: str = ""
    description: str = ""


def scene_from_dict(doc, env=True):
    validate(doc, "scene")
    seed = int(doc.get("seed", 0))
    if env:
        seed = _env_seed(seed)
    try:
        bounds = Aabb3(doc["bounds"]["min"], doc["bounds"]["max"])
        prims = [ScenePrimitive(p["kind"], p["center"], tuple(p.get("dims", ()))) for p in doc["primitives"]]
        scene = GroundTruthScene(prims, bounds, seed)
        cam = doc.get("camera", {})
        camera = CameraSpec(
            position=cam.get("position"),
            pitch_deg=cam.get("pitch_deg", 35.0),
            resolution=tuple(cam.get("resolution", (160, 120))),
            noise_sigma=cam.get("noise_sigma", 0.003),
            fov_deg=tuple(cam.get("fov_deg", (58.0, 45.0))),
            height=cam.get("height", 0.6),
        )
        drops = tuple(DropoutRegion(tuple(d["rect"]), d.get("cause", "reflective")) for d in doc.get("dropouts", ()))
    except ValueError as e:
        raise ConfigError(f"scene document invalid: {e}") from e
    for d in drops:
        x0, y0, x1, y1 = d.footprint
        if x0 < bounds.min[0] or y0 < bounds.min[1] or x1 > bounds.max[0] or y1 > bounds.max[1]:
            raise ConfigError(f"dropout {list(d.footprint)} leaves the scene bounds")
    return SceneConfig(scene, camera, drops, doc.get("name", ""), doc.get("description", ""))


def scene_to_dict(sc):
    cam = sc.camera
    out = {}
    if sc.name:
        out["name"] = sc.name
    if sc.description:
        out["description"] = sc.description
    out.update(sc.scene.to_dict())
    out["camera"] = {
        "position": None if cam.position is None else [float(v) for v in cam.position],
        "pitch_deg": cam.pitch_deg,
        "resolution": list(cam.resolution),
        "noise_sigma": cam.noise_sigma,
        "fov_deg": list(cam.fov_deg),
        "height": cam.height,
    }
    out["dropouts"] = [d.to_dict() for d in sc.dropouts]
    return out


# exploration configs -----------------------------------------------------------


def _regions(items):
    return tuple(QueryRegion(r["center"], r["radius"], r.get("name", f"region_{i}")) for i, r in enumerate(items))


def _probe(doc):
    kw = dict(doc)
    for key in ("grid_extent", "below_offset"):
        mm = kw.pop(f"{key}_mm", None)
        if mm is not None:
            kw[key] = mm / 1000.0
    return ProbeParams(**kw)


def config_from_dict(doc, env=True):
    validate(doc, "config")
    seed = int(doc.get("seed", 0))
    if env:
        seed = _env_seed(seed)
    grf = doc.get("grf", {})
    gpis = dict(doc.get("gpis", {}))
    offset = gpis.pop("offset", OFF_SURFACE_OFFSET)
    cl = dict(doc.get("classifier", {}))
    regions = _regions(cl.pop("regions", ()))
    ts = dict(doc.get("testset", {}))
    if "grid_size" in ts:
        ts["grid_size"] = tuple(ts["grid_size"])
    try:
        return ExplorationConfig(
            grf=KernelParams(
                grf.get("sigma_e2", 0.01),
                grf.get("sigma_w2", 0.0025),
                grf.get("noise_var", GRF_NOISE_VAR),
                grf.get("max_points", MAX_POINTS),
            ),
            gpis=KernelParams(
                gpis.get("sigma_e2", 1.0),
                gpis.get("sigma_w2", 0.0025),
                gpis.get("noise_var", GPIS_NOISE_VAR),
                gpis.get("max_points", MAX_POINTS),
            ),
            off_surface_offset=offset,
            roi=RoiParams(**doc.get("roi", {})),
            probe=_probe(doc.get("probe", {})),
            testset=TestsetParams(**ts),
            classifier=ClassifierParams(regions=regions, **cl),
            iterations=doc.get("iterations", 1),
            seed=seed,
            mesh_each_interaction=doc.get("mesh_each_interaction", False),
        )
    except ValueError as e:
        raise ConfigError(f"config document invalid: {e}") from e


def _kernel_dict(k):
    return {"sigma_e2": k.sigma_e2, "sigma_w2": k.sigma_w2, "noise_var": k.noise_var, "max_points": k.max_points}


def config_to_dict(cfg):
    """Fully explicit document; ``config_from_dict`` inverts it."""
    p, t, c = cfg.probe, cfg.testset, cfg.classifier
    return {
        "seed": cfg.seed,
        "iterations": cfg.iterations,
        "mesh_each_interaction": cfg.mesh_each_interaction,
        "grf": _kernel_dict(cfg.grf),
        "gpis": {**_kernel_dict(cfg.gpis), "offset": cfg.off_surface_offset},
        "roi": {"min_area": cfg.roi.min_area, "max_targets": cfg.roi.max_targets},
        "probe": {
            "grid_side": p.grid_side,
            "grid_extent": p.grid_extent,
            "step": p.step,
            "below_offset": p.below_offset,
            "force_threshold": p.force_threshold,
            "diverge_dist": p.diverge_dist,
            "start_clearance": p.start_clearance,
            "downsample": p.downsample,
        },
        "testset": {"grid_size": list(t.grid_size), "m": t.m, "tau_v": t.tau_v, "delta_y": t.delta_y},
        "classifier": {
            "base_z": c.base_z,
            "tau_class": c.tau_class,
            "var_max": c.var_max,
            "dz": c.dz,
            "regions": [r.to_dict() for r in c.regions],
        },
    }


def regions_from_dict(doc):
    """``(regions, classifier_overrides)`` from a regions document."""
    validate(doc, "regions")
    overrides = {k: doc[k] for k in ("base_z", "tau_class", "var_max", "dz") if k in doc}
    return _regions(doc["regions"]), overrides


# files -------------------------------------------------------------------------


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}: {e.msg}") from e


def load_scene(path):
    return scene_from_dict(load_json(path))


def load_config(path):
    return config_from_dict(load_json(path))


def load_regions(path):
    return regions_from_dict(load_json(path))


def scenario_names():
    """Names of the packaged scenarios, e.g. ``table1_1``."""
    root = resources.files("gpisx").joinpath("scenarios")
    return sorted(p.name[: -len(".scene.json")] for p in root.iterdir() if p.name.endswith(".scene.json"))


def scenario_path(name, kind="scene"):
    """Filesystem path of a packaged ``<name>.scene.json`` or ``<name>.config.json``."""
    if kind not in ("scene", "config"):
        raise ValueError("kind must be 'scene' or 'config'")
    path = resources.files("gpisx").joinpath("scenarios", f"{name}.{kind}.json")
    if not path.is_file():
        raise ConfigError(f"no packaged scenario {name!r}; known: {', '.join(scenario_names())}")
    return str(path)
