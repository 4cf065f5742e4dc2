"""Run one packaged scenario through a single exploration step.

A camera cloud is rendered from the ground truth, the height field and the
implicit surface are built from it, the probe touches the uncertain spots
and the query regions are labelled before and after touching.

    python demos/quickstart.py [scenario]      # default table1_1
"""

import dataclasses
import sys

from gpisx.config import load_config, load_scene, scenario_names, scenario_path
from gpisx.explore import run_step
from gpisx.scene import synth_camera


def main(name="table1_1"):
    if name not in scenario_names():
        sys.exit(f"unknown scenario {name!r}; pick one of {', '.join(scenario_names())}")
    sc = load_scene(scenario_path(name))
    cfg = load_config(scenario_path(name, "config"))
    cfg = dataclasses.replace(cfg, mesh_each_interaction=False)

    cloud = synth_camera(sc.scene, sc.camera, sc.dropouts)
    print(f"{name}: {sc.description or 'no description'}")
    print(f"camera cloud: {len(cloud)} points")

    log = run_step(cloud, sc.scene, cfg)

    print(f"\n{len(log.rois)} probe targets")
    for rec in log.interactions:
        if rec["status"] != "ok":
            print(f"  #{rec['index']}: skipped ({rec['reason']})")
            continue
        i = rec["index"]
        v0, v1 = rec["target_var_before"][i], rec["target_var_after"][i]
        print(
            f"  #{i}: {rec['outcome']['kind']:<15} {rec['batch_size']:>3} tactile points,"
            f" variance at target {v0:.3f} -> {v1:.3f}"
        )

    print("\nregion      before    after")
    for region, after in log.final_labels.items():
        print(f"  {region:<9} {log.pre_labels[region]:<9} {after}")

    print(
        f"\nmesh: {len(log.mesh.vertices)} vertices from {log.testset_size} GPIS queries"
        f" (a dense grid would need {log.dense_size}); {log.wall_time_s:.1f} s"
    )


if __name__ == "__main__":
    main(*sys.argv[1:2])
