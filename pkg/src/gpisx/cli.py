"""Command-line entry point: ``gpisx <simulate|explore|mesh|classify|report>``.

Exit status is 0 on success, 1 on a usage error and 2 when the command
itself fails. ``--scene`` and ``--config`` accept a file path or the name
of a packaged scenario such as ``table1_1``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import __version__
from .classifier import RegionLabel, assess_region
from .config import (
    config_from_dict,
    config_to_dict,
    load_json,
    load_regions,
    scenario_names,
    scenario_path,
    scene_from_dict,
    scene_to_dict,
    validate,
)
from .errors import ConfigError, GpisxError
from .explore import ClassifierParams, ExplorationStep, close_loop, reconstruct_mesh
from .gpis import TactileBatch, add_tactile, build_gpis
from .grf import build_grf
from .plyio import atomic_write, load_cloud, save_cloud, save_mesh
from .scene import synth_camera

__all__ = ["main", "build_parser"]

LOG_FORMAT = "gpisx-log/1"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="gpisx", description="Probabilistic surface exploration with simulated touch.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="render the synthetic camera cloud of a scene")
    s.add_argument("--scene", required=True, help="scene JSON or packaged scenario name")
    s.add_argument("--out", required=True, help="output cloud (.ply)")

    e = sub.add_parser("explore", help="run exploration steps and write log.json plus meshes")
    e.add_argument("--scene", required=True, help="scene JSON or packaged scenario name (ground truth for the probe)")
    e.add_argument("--cloud", required=True, help="input cloud (.ply or .csv)")
    e.add_argument("--config", required=True, help="exploration config JSON or packaged scenario name")
    e.add_argument("--out-dir", required=True, help="directory for log.json, timing.json and meshes")
    e.add_argument(
        "--final-mesh-only", action="store_true", help="skip the mesh after every interaction (much faster)"
    )

    m = sub.add_parser("mesh", help="mesh the vision-only GPIS of a cloud")
    m.add_argument("--cloud", required=True)
    m.add_argument("--config", required=True)
    m.add_argument("--out", required=True, help="output mesh (.ply)")

    c = sub.add_parser("classify", help="label query regions with the models recorded in a log")
    c.add_argument("--log", required=True)
    c.add_argument("--regions", required=True, help="regions JSON")
    c.add_argument("--json", action="store_true", help="print JSON instead of a table")

    r = sub.add_parser("report", help="print table rows of pre/post exploration labels")
    r.add_argument("--log", required=True, nargs="+")
    return p


# helpers -------------------------------------------------------------------------


def _resolve(arg, kind):
    if os.path.exists(arg):
        return arg
    if arg in scenario_names():
        return scenario_path(arg, kind)
    raise ConfigError(f"{arg}: no such file or packaged scenario")


def _load_scene(arg):
    return scene_from_dict(load_json(_resolve(arg, "scene")))


def _load_config(arg):
    return config_from_dict(load_json(_resolve(arg, "config")))


def _write_json(path, doc):
    with atomic_write(path) as fh:
        json.dump(doc, fh, indent=1, sort_keys=False)
        fh.write("\n")


def _load_log(path):
    doc = load_json(path)
    validate(doc, "log")
    return doc


def _rebuild(log_path, doc, step=-1):
    """Models at the end of a logged step, rebuilt from its cloud and batches."""
    cfg = config_from_dict(doc["config"], env=False)
    st = doc["steps"][step]
    cloud = load_cloud(os.path.join(os.path.dirname(os.path.abspath(log_path)), st.get("cloud", doc["cloud"])))
    grf = build_grf(cloud, cfg.grf.kernel, cfg.grf.noise_var, cfg.grf.max_points, cfg.seed)
    gpis = build_gpis(cloud, cfg.gpis.kernel, cfg.gpis.noise_var, cfg.seed, cfg.off_surface_offset, cfg.gpis.max_points)
    for rec in st["interactions"]:
        if rec["status"] == "ok":
            b = rec["batch"]
            gpis = add_tactile(gpis, TactileBatch(np.array(b["points"]), np.array(b["labels"]), rec["index"]))
    return cfg, grf, gpis


# commands ------------------------------------------------------------------------


def cmd_simulate(args, out):
    sc = _load_scene(args.scene)
    cloud = synth_camera(sc.scene, sc.camera, sc.dropouts)
    save_cloud(cloud, args.out)
    print(f"wrote {len(cloud)} points to {args.out}", file=out)


def cmd_explore(args, out):
    sc = _load_scene(args.scene)
    cfg = _load_config(args.config)
    cfg = dataclasses.replace(cfg, mesh_each_interaction=not args.final_mesh_only)
    os.makedirs(args.out_dir, exist_ok=True)
    cloud = load_cloud(args.cloud)
    steps, timing = [], []
    for it in range(cfg.iterations):
        prefix = "" if cfg.iterations == 1 else f"iter{it:02d}_"
        cloud_name = f"{prefix}cloud.ply"
        cloud_path = os.path.join(args.out_dir, cloud_name)
        save_cloud(cloud, cloud_path)
        # the next step and `classify` both read the file, so use its values
        cloud = load_cloud(cloud_path)
        log = ExplorationStep(cloud, sc.scene, cfg).run()
        st = log.to_dict(include_timing=False)
        st["cloud"] = cloud_name
        ok = [r for r in st["interactions"] if r["status"] == "ok"]
        for rec, mesh in zip(ok, log.meshes):
            rec["mesh_file"] = f"{prefix}mesh_{rec['index'] + 1:02d}.ply"
            save_mesh(mesh, os.path.join(args.out_dir, rec["mesh_file"]))
        if log.mesh is not None:
            st["mesh"]["file"] = f"{prefix}mesh_final.ply"
            save_mesh(log.mesh, os.path.join(args.out_dir, st["mesh"]["file"]))
        steps.append(st)
        timing.append(
            {"wall_time_s": log.wall_time_s, "interactions": [r.get("wall_time_s") for r in log.interactions]}
        )
        pairs = ", ".join(f"{k}: {log.pre_labels[k]} -> {v}" for k, v in log.final_labels.items())
        print(f"step {it}: {len(ok)} interactions, {log.wall_time_s:.1f} s; {pairs}", file=out)
        if it + 1 < cfg.iterations:
            cloud = close_loop(log, cfg)
    doc = {
        "format": LOG_FORMAT,
        "scene": scene_to_dict(sc),
        "config": config_to_dict(cfg),
        "cloud": steps[0]["cloud"],
        "steps": steps,
    }
    validate(doc, "log")
    _write_json(os.path.join(args.out_dir, "log.json"), doc)
    _write_json(os.path.join(args.out_dir, "timing.json"), {"steps": timing})
    print(f"wrote {os.path.join(args.out_dir, 'log.json')}", file=out)


def cmd_mesh(args, out):
    cfg = _load_config(args.config)
    cloud = load_cloud(args.cloud)
    grf = build_grf(cloud, cfg.grf.kernel, cfg.grf.noise_var, cfg.grf.max_points, cfg.seed)
    gpis = build_gpis(cloud, cfg.gpis.kernel, cfg.gpis.noise_var, cfg.seed, cfg.off_surface_offset, cfg.gpis.max_points)
    _, mesh = reconstruct_mesh(grf, gpis, cfg.testset)
    save_mesh(mesh, args.out)
    print(f"wrote {len(mesh.vertices)} vertices, {len(mesh)} triangles to {args.out}", file=out)


def cmd_classify(args, out):
    doc = _load_log(args.log)
    cfg, grf, gpis = _rebuild(args.log, doc)
    regions, overrides = load_regions(args.regions)
    c = dataclasses.replace(ClassifierParams(), **{**_classifier_kw(cfg.classifier), **overrides})
    bounds = scene_from_dict(doc["scene"], env=False).scene.bounds
    rows = {}
    for r in regions:
        a = assess_region(gpis, grf, r, bounds, c.base_z, c.tau_class, c.var_max, c.dz)
        rows[r.name] = a.to_dict()
    if args.json:
        json.dump(rows, out, indent=1)
        out.write("\n")
        return
    print(f"{'region':<12} {'label':<8} {'height':>9} {'variance':>9}", file=out)
    for name, a in rows.items():
        print(f"{name:<12} {a['label']:<8} {a['mean_height']:>9.4f} {a['mean_variance']:>9.4f}", file=out)


def _classifier_kw(c):
    return {"base_z": c.base_z, "tau_class": c.tau_class, "var_max": c.var_max, "dz": c.dz}


def _pair(labels, names):
    return "(" + ",".join(RegionLabel(labels[n]).short for n in names) + ")"


def report_row(doc):
    """One table row: scene name, pre-labels, final labels and outcomes."""
    names = [r["name"] for r in doc["config"]["classifier"]["regions"]]
    first, last = doc["steps"][0], doc["steps"][-1]
    outcomes = [
        r["outcome"]["kind"] if r["status"] == "ok" else "skipped" for st in doc["steps"] for r in st["interactions"]
    ]
    return {
        "scene": doc["scene"].get("name", ""),
        "regions": names,
        "pre": _pair(first["pre_labels"], names),
        "final": _pair(last["final_labels"], names),
        "interactions": sum(1 for o in outcomes if o != "skipped"),
        "outcomes": outcomes,
    }


def cmd_report(args, out):
    print(f"{'scene':<12} {'regions':<16} {'labels':<26} {'L':>2}  outcomes", file=out)
    for path in args.log:
        row = report_row(_load_log(path))
        short = {"contact": "c", "diverged": "d", "workspace_limit": "w", "skipped": "s"}
        print(
            f"{row['scene'] or path:<12} {'/'.join(row['regions']):<16} "
            f"{row['pre'] + '->' + row['final']:<26} {row['interactions']:>2}  "
            f"{''.join(short[o] for o in row['outcomes'])}",
            file=out,
        )


COMMANDS = {
    "simulate": cmd_simulate,
    "explore": cmd_explore,
    "mesh": cmd_mesh,
    "classify": cmd_classify,
    "report": cmd_report,
}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args, out)
    except (GpisxError, OSError, ValueError) as e:
        print(f"gpisx {args.command}: error: {e}", file=sys.stderr)
        return 2
    return 0
