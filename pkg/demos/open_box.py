"""Touch carves free space into an open box the camera cannot see into.

From above, the camera only sees the rim of the box, so the implicit
surface closes over it and its interior looks solid. A vertical probe
through the opening finds no floor within reach; its free-space grids tell
the GPIS that the inside is empty.

    python demos/open_box.py
"""

import numpy as np

from gpisx.config import load_config, load_scene, scenario_path
from gpisx.gpis import add_tactile, build_gpis
from gpisx.probe import execute_probe, synthesize_tactile
from gpisx.roi import RoiTriangle, Triangle25
from gpisx.scene import synth_camera


def profile(gpis, x, y, zs):
    return gpis.query(np.column_stack([np.full_like(zs, x), np.full_like(zs, y), zs])).mean


def main():
    sc = load_scene(scenario_path("table2_3"))
    cfg = load_config(scenario_path("table2_3", "config"))
    box = next(p for p in sc.scene.primitives if p.kind == "box_empty_top_open")
    cloud = synth_camera(sc.scene, sc.camera, sc.dropouts)
    gpis = build_gpis(cloud, cfg.gpis.kernel, cfg.gpis.noise_var, cfg.seed, cfg.off_surface_offset, cfg.gpis.max_points)

    # a vertical approach aimed at the centre of the opening
    rim = box.center + np.array([0.0, 0.0, box.dims[2] / 2])
    tri = Triangle25(rim + np.array([[0.01, 0, 0], [-0.01, 0.01, 0], [-0.01, -0.01, 0]]))
    outcome = execute_probe(sc.scene, RoiTriangle(tri, 1.0, np.array([0.0, 0.0, -1.0]), rim), cfg.probe)
    batch = synthesize_tactile(outcome, cfg.probe)
    touched = add_tactile(gpis, batch)
    print(f"probe outcome: {outcome.kind}; tactile labels {batch.counts()}")

    # GPIS mean along the box axis: > 0 is free space, < 0 is material
    floor = box.center[2] - box.dims[2] / 2
    zs = np.linspace(rim[2] + 0.03, floor, 9)
    before = profile(gpis, *box.center[:2], zs)
    after = profile(touched, *box.center[:2], zs)
    print("\n     z   vision   +touch")
    for z, b, a in zip(zs, before, after):
        print(f"{z:6.3f} {b:8.3f} {a:8.3f}")


if __name__ == "__main__":
    main()
