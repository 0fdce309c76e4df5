"""Command-line entry point: ``pickstow run|calibrate|plan|perceive``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .calibration import (NoiseModel, PointPairSet, estimate_rigid_transform, rms_vs_sample_size,
                          subset_sweep)
from .errors import ConfigError, PickStowError, SchemaError
from .geometry import Box, pose_from_json
from .orchestrator.config import RunConfig
from .orchestrator.report import emit_metrics
from .orchestrator.runner import PerceptionModels, run_pick_task, run_stow_task
from .orchestrator.scenes import (TOTE, generate_scene_library, load_scene_library,
                                  save_scene_library)
from .orchestrator.workorder import load_work_order
from .perception.pipeline import locate_suction_target
from .perception.scene import (PointCloud, RenderSettings, SceneDescription, bin_view_camera, render_cloud,
                               write_pgm)
from .planning.collision import CollisionWorld
from .planning.rrt import PlanRequest, plan_rrt, plans_to_csv
from .planning.voxels import VoxelGrid, voxelize
from .planning.workcell import build_workcell
from .rack import BIN_NAMES, RackModel, bin_index

log = logging.getLogger("pickstow")

EXIT_INPUT = 2      # config, schema or I/O problem
EXIT_FAILED = 1     # the requested computation found no answer


def _config(path) -> RunConfig:
    return RunConfig.load(path) if path else RunConfig()


def _floats(text: str, name: str) -> np.ndarray:
    try:
        values = np.array([float(v) for v in text.replace(",", " ").split()])
    except ValueError:
        raise ConfigError(f"{name} must be a list of numbers") from None
    if values.size not in (6, 16):
        raise ConfigError(f"{name} needs 6 joint angles or 16 pose entries, got {values.size}")
    return values if values.size == 6 else pose_from_json(values.reshape(4, 4).tolist())


# -- run ---------------------------------------------------------------------


def _attempt_json(a) -> dict:
    doc = {"item": a.item, "source": a.source, "destination": a.destination,
           "outcome": a.outcome, "detail": a.detail, "stage_timings": a.stage_timings}
    if a.suction_point is not None:
        t = a.suction_point
        doc["suction_point"] = {"point": t.point.tolist(), "normal": t.normal.tolist(),
                                "centroid": np.asarray(t.centroid).tolist(),
                                "confidence": t.confidence, "pixel": list(t.pixel)}
    if a.grasp_q is not None:
        doc["grasp_q"] = np.asarray(a.grasp_q).tolist()
    return doc


def cmd_run(args) -> int:
    config = _config(args.config)
    order = load_work_order(args.order)
    log.info("building workcell")
    workcell = build_workcell(config.workcell, args.seed)
    out = Path(args.out)
    if args.scenes:
        scenes = load_scene_library(args.scenes)
        needed = ({t.bin for t in order.targets} if order.mode == "pick"
                  else ({TOTE} if order.targets else set()))
        missing = sorted(needed - set(scenes))
        if missing:
            raise OSError(f"scene directory {args.scenes} has no scene for {', '.join(missing)}")
    else:
        scenes = generate_scene_library(order, workcell.rack, workcell.tote.pose, args.seed)
        save_scene_library(scenes, out / "scenes")

    models = PerceptionModels(workcell, config)
    log.info("running %d %s targets", len(order.targets), order.mode)
    runner = run_pick_task if order.mode == "pick" else run_stow_task
    report = runner(order, scenes, config, args.seed, workcell, models)

    emit_metrics(report, out)
    (out / "attempts.json").write_text(
        json.dumps([_attempt_json(a) for a in report.attempts], indent=2))
    (out / "plans.csv").write_text(plans_to_csv(p for a in report.attempts for p in a.plans))
    summary = report.summary()
    print(json.dumps({"outcomes": summary["outcomes"], "total_score": summary["total_score"],
                      "items_per_minute": summary["items_per_minute"]}))
    return 0


# -- calibrate ---------------------------------------------------------------


def cmd_calibrate(args) -> int:
    pairs = PointPairSet.load(args.pairs) if args.pairs else None
    if pairs is None and not args.sweep:
        raise ConfigError("calibrate needs --pairs, --sweep or both")
    if pairs is not None and not args.sweep:
        fit = estimate_rigid_transform(pairs)
        print(json.dumps({"transform": fit.transform.tolist(), "rms_error_m": fit.rms_error,
                          "residuals_m": fit.per_point_residuals.tolist()}, indent=2))
        return 0
    if pairs is not None:
        sizes = args.sizes or list(range(3, len(pairs) + 1))
        rows = subset_sweep(pairs, sizes, args.trials, args.seed)
    else:
        rows = rms_vs_sample_size(NoiseModel(sigma=args.sigma), args.sizes or range(3, 21),
                                  args.trials, args.seed, metric=args.metric)
    print("N,mean_rms_m")
    for n, rms in rows:
        print(f"{n},{rms:.9g}")
    return 0


# -- plan --------------------------------------------------------------------


def load_world(path) -> CollisionWorld:
    """A CollisionWorld document, or ``{"rack": <RackModel>, "cloud": <ASCII
    cloud file>, "voxel_size": m, "boxes": [...]}`` where the rack's wall
    boxes and the voxelized cloud become obstacles."""
    path = Path(path)
    doc = json.loads(path.read_text())
    if "rack" not in doc:
        return CollisionWorld.from_dict(doc)
    boxes = list(RackModel.from_dict(doc["rack"]).wall_boxes)
    boxes += [Box.from_json(b) for b in doc.get("boxes", ())]
    voxels = VoxelGrid()
    if "cloud" in doc:
        cloud = PointCloud.from_ascii((path.parent / doc["cloud"]).read_text())
        voxels = voxelize(cloud, float(doc.get("voxel_size", 0.01)))
    return CollisionWorld(tuple(boxes), voxels)


def cmd_plan(args) -> int:
    config = _config(args.config)
    world = load_world(args.world)
    ps, model = config.workcell.planner, config.workcell.model
    start = _floats(args.start, "--start")
    if start.shape != (6,):
        raise ConfigError("--start must be 6 joint angles")
    goal = _floats(args.goal, "--goal")
    req = PlanRequest(start, goal, world, model, ps.step_size, ps.goal_bias, ps.max_samples,
                      args.seed, ps.smoothing_attempts, "free", config.workcell.ik)
    try:
        plan = plan_rrt(req)
    except PickStowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    if not plan.success:
        print(f"error: {plan.error}", file=sys.stderr)
        return EXIT_FAILED
    text = plan.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# -- perceive ----------------------------------------------------------------


def cmd_perceive(args) -> int:
    config = _config(args.config)
    scene = SceneDescription.load(args.scene)
    workcell = build_workcell(config.workcell, args.seed)
    camera = scene.camera_pose
    if camera is None:
        camera = bin_view_camera(workcell.rack, bin_index(args.bin),
                                 config.workcell.binview_standoff)
    render = config.render
    if scene.noise_sigma_m is not None:
        render = RenderSettings(render.camera, scene.noise_sigma_m, render.color_jitter,
                                render.wall_color)
    rng = np.random.default_rng(args.seed)
    obstacles = tuple(workcell.rack.wall_boxes) + tuple(workcell.tote.wall_boxes())
    cloud = render_cloud(scene.objects, obstacles, camera, render, rng)
    forest = PerceptionModels(workcell, config).forest(args.item)
    try:
        result = locate_suction_target(cloud, scene.objects, args.item, forest,
                                       config.perception, rng)
    except PickStowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    if args.pgm:
        write_pgm(result.probability.values, args.pgm)
    t = result.target
    print(json.dumps({"item": args.item, "detection": list(result.detection.box),
                      "point": t.point.tolist(), "normal": t.normal.tolist(),
                      "centroid": np.asarray(t.centroid).tolist(),
                      "confidence": t.confidence, "pixel": list(t.pixel)}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pickstow", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a pick or stow work order in simulation")
    run.add_argument("--order", required=True, help="work-order JSON file")
    run.add_argument("--scenes", help="scene directory (bin_A.json ... tote.json); "
                                      "generated from the order when omitted")
    run.add_argument("--config", help="run configuration JSON")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True, help="output directory for metrics")
    run.set_defaults(func=cmd_run)

    cal = sub.add_parser("calibrate", help="fit a camera-to-robot rigid transform")
    cal.add_argument("--pairs", help='JSON {"camera": [[x,y,z],...], "robot": [...]}')
    cal.add_argument("--sweep", action="store_true", help="RMS versus number of pairs")
    cal.add_argument("--sizes", type=int, nargs="+", help="pair counts for the sweep")
    cal.add_argument("--trials", type=int, default=100)
    cal.add_argument("--sigma", type=float, default=0.005,
                     help="noise (m) for the synthetic sweep without --pairs")
    cal.add_argument("--metric", choices=("truth", "residual"), default="truth",
                     help="synthetic sweep: error against ground truth or the fit residual")
    cal.add_argument("--seed", type=int, default=0)
    cal.set_defaults(func=cmd_calibrate)

    plan = sub.add_parser("plan", help="plan a collision-free joint path")
    plan.add_argument("--world", required=True,
                      help="collision world JSON, or a rack model plus an optional cloud file")
    plan.add_argument("--start", required=True, help="6 joint angles, comma separated")
    plan.add_argument("--goal", required=True, help="6 joint angles or a row-major 4x4 pose")
    plan.add_argument("--config", help="run configuration JSON (robot and planner)")
    plan.add_argument("--seed", type=int, default=0)
    plan.add_argument("--out", help="write the plan CSV here instead of stdout")
    plan.set_defaults(func=cmd_plan)

    per = sub.add_parser("perceive", help="locate a suction point for one item in a scene")
    per.add_argument("--scene", required=True, help="scene description JSON")
    per.add_argument("--item", required=True)
    per.add_argument("--bin", default=BIN_NAMES[0], choices=BIN_NAMES,
                     help="bin whose viewing camera is used if the scene has none")
    per.add_argument("--config", help="run configuration JSON")
    per.add_argument("--seed", type=int, default=0)
    per.add_argument("--pgm", help="write the probability map as a PGM image")
    per.set_defaults(func=cmd_perceive)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: work order invalid at {exc}", file=sys.stderr)
    except (ConfigError, PickStowError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
