"""The pick and stow state machines.

Each attempt runs the same stage sequence: look up the target, drive to the
viewing pose, perceive, then plan the grasp, the transfer and the retreat.
Any failure ends that attempt with an outcome and the loop moves on.
Forest training happens up front (and is cached) so it never shows up in
the stage timings.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import ItemNotFoundError, PickStowError
from ..geometry import Box
from ..perception.catalog import ITEM_IDS, get_item, place_in_bin
from ..perception.forest import RandomForest
from ..perception.pipeline import PerceptionResult, locate_suction_target
from ..perception.scene import PointCloud, SceneObject, render_cloud, surface_query
from ..perception.training import FeatureBank, TopDownStage, build_feature_bank, train_item_forest
from ..planning.voxels import voxelize
from ..planning.workcell import Workcell, approach_segment, build_workcell, grasp_segments
from ..rack import BIN_NAMES, bin_index
from ..seeding import derive_seed
from .config import RunConfig
from .report import RunReport, TaskAttempt
from .scenes import TOTE, SceneLibrary, bin_slots
from .suction import PERCEPTION_FAILED, PLAN_FAILED, SUCCEEDED, WRONG_ITEM, simulate_suction

_SEGMENT_STAGES = {"pre_grasp": "motion2_pregrasp", "post_grasp": "motion3_postgrasp",
                   "tote_to_home": "motion4_tote_to_home"}


@dataclass(eq=False)
class PerceptionModels:
    """Feature bank and per-item forests, built on first use and cached."""

    workcell: Workcell
    config: RunConfig
    seed: int = 0
    _bank: FeatureBank | None = None
    _forests: dict[str, RandomForest] = field(default_factory=dict)

    @property
    def bank(self) -> FeatureBank:
        if self._bank is None:
            fs, ps = self.config.forest, self.config.perception
            self._bank = build_feature_bank(
                self.workcell.rack, ITEM_IDS, fs.bank_views, fs.bank_pixels_per_view,
                fs.bank_background, settings=self.config.render, window=ps.window,
                shape_radius=ps.shape_radius, seed=self.seed, normal_k=ps.normal_k,
                normal_radius=ps.normal_radius, top_down=TopDownStage(
                    self.workcell.tote.pose, self.workcell.camera_pose(self.workcell.tote_view),
                    tuple(self.workcell.tote.wall_boxes())))
        return self._bank

    def forest(self, item_id: str) -> RandomForest:
        if item_id not in self._forests:
            fs = self.config.forest
            self._forests[item_id] = train_item_forest(
                self.bank, item_id, fs.tree_count, fs.max_depth, self.seed, fs.max_negatives)
        return self._forests[item_id]

    def prepare(self, items) -> None:
        for item in dict.fromkeys(items):
            self.forest(item)


def _target_object(objects, item_id: str, point) -> SceneObject:
    """The instance of ``item_id`` whose surface is nearest ``point``."""
    candidates = [o for o in objects if o.id == item_id]
    dists = [float(surface_query(o, point).distance[0]) for o in candidates]
    return candidates[int(np.argmin(dists))]


def _obstacle_world(workcell: Workcell, cloud: PointCloud, result: PerceptionResult,
                    walls) -> object:
    ps = workcell.planner
    pts = cloud.points[result.support]
    pts = pts[np.all(np.isfinite(pts), axis=1)]
    margin = ps.exclusion_margin
    exclusion = [w.inflated(ps.voxel_size) for w in walls]
    if len(pts):
        exclusion.append(Box(tuple(pts.min(axis=0) - margin), tuple(pts.max(axis=0) + margin)))
    voxels = voxelize(cloud, ps.voxel_size, exclusion)
    return workcell.static_world().with_voxels(voxels)


@dataclass
class _Attempt:
    """Mutable scratch record for one attempt."""

    item: str
    source: str
    destination: str
    timings: dict = field(default_factory=dict)
    plans: list = field(default_factory=list)
    target: object = None
    grasp_q: np.ndarray | None = None

    def finish(self, outcome: str, detail: str = "") -> TaskAttempt:
        return TaskAttempt(self.item, self.source, self.destination, outcome, dict(self.timings),
                           self.target, self.grasp_q, tuple(self.plans), detail)


def _execute(att: _Attempt, workcell: Workcell, config: RunConfig, models: PerceptionModels,
             objects: list[SceneObject], walls, approach, view_q, drop_q, retreat,
             seed: int, t_start: float):
    """Stages after the JSON lookup. Returns (TaskAttempt, picked object or None).

    Raises ItemNotFoundError when the item is not visible so the caller can
    decide whether to defer it.
    """
    clock = time.perf_counter
    att.timings["json_read"] = clock() - t_start

    t0 = clock()
    first = approach_segment(workcell, approach, workcell.static_world())
    att.timings["motion1_home_to_binview"] = clock() - t0
    att.plans.append(first)
    if not first.success:
        return att.finish(PLAN_FAILED, first.error or "approach blocked"), None

    t0 = clock()
    rng = np.random.default_rng(derive_seed(seed, "perception"))
    try:
        cloud = render_cloud(objects, walls, workcell.camera_pose(view_q), config.render, rng)
        forest = models.forest(att.item)
        result = locate_suction_target(cloud, objects, att.item, forest, config.perception, rng)
        world = _obstacle_world(workcell, cloud, result, walls)
    except ItemNotFoundError:
        raise
    except PickStowError as exc:
        att.timings["object_recognition"] = clock() - t0
        return att.finish(PERCEPTION_FAILED, str(exc)), None
    att.timings["object_recognition"] = clock() - t0
    att.target = result.target

    seg_times: dict[str, float] = {}
    plans = grasp_segments(workcell, view_q, result.target, drop_q, retreat, world,
                           derive_seed(seed, "motion"), seg_times, approach)
    for key, value in seg_times.items():
        att.timings[_SEGMENT_STAGES[key]] = value
    att.plans.extend(plans)
    if plans[0].success:
        att.grasp_q = plans[0].waypoints[-1]
    failed = next((p for p in plans if not p.success), None)
    if failed is not None:
        return att.finish(PLAN_FAILED, failed.error or f"{failed.segment_label} failed"), None

    wanted = _target_object(objects, att.item, result.target.point)
    outcome = simulate_suction(result.target, wanted, config.suction, objects)
    if outcome == SUCCEEDED:
        return att.finish(outcome), wanted
    if outcome == WRONG_ITEM:
        other = min((o for o in objects if o is not wanted),
                    key=lambda o: float(surface_query(o, result.target.point).distance[0]))
        return att.finish(outcome, f"lifted {other.id}"), other
    return att.finish(outcome), None


def _setup(config: RunConfig | None, seed: int, workcell, models):
    config = config if config is not None else RunConfig()
    workcell = workcell if workcell is not None else build_workcell(config.workcell, seed)
    models = models if models is not None else PerceptionModels(workcell, config)
    return config, workcell, models


def run_pick_task(order, scenes: SceneLibrary, config: RunConfig | None = None, seed: int = 0,
                  workcell: Workcell | None = None,
                  models: PerceptionModels | None = None) -> RunReport:
    """Pick every target from its bin into the tote, one attempt per target."""
    if order.mode != "pick":
        raise ValueError("run_pick_task needs a pick-mode work order")
    config, workcell, models = _setup(config, seed, workcell, models)
    models.prepare(t.item for t in order.targets)

    bins = {name: list(scenes.get(name, ())) for name in BIN_NAMES}
    tote = list(scenes.get(TOTE, ()))
    seen: dict[tuple[str, str], int] = {}
    attempts = []
    for target in order.targets:
        t_start = time.perf_counter()
        occurrence = seen.get((target.bin, target.item), 0)
        seen[(target.bin, target.item)] = occurrence + 1
        b = bin_index(target.bin)
        objects = bins[target.bin]
        att = _Attempt(target.item, target.bin, TOTE)
        attempt_seed = derive_seed(seed, "pick", target.bin, target.item, occurrence)
        try:
            result, lifted = _execute(
                att, workcell, config, models, objects, workcell.rack.wall_boxes,
                workcell.home_to_binview[b], workcell.binview[b], workcell.tote_drop,
                workcell.tote_drop_to_home, attempt_seed, t_start)
        except ItemNotFoundError as exc:
            att.timings.setdefault("object_recognition", 0.0)
            result, lifted = att.finish(PERCEPTION_FAILED, str(exc)), None
        if lifted is not None:
            objects.remove(lifted)
            tote.append(lifted)
        attempts.append(result)
    return RunReport.from_attempts(attempts, config.score_table)


def choose_destination(bins: dict[str, list]) -> str:
    """Least-occupied bin; ties go to the lowest index."""
    return min(BIN_NAMES, key=lambda name: (len(bins[name]), bin_index(name)))


def _stow_into(workcell: Workcell, bins, name: str, obj: SceneObject) -> None:
    b = bin_index(name)
    frame, size = workcell.rack.bin_frame(b), workcell.rack.bin_size(b)
    depth, lateral = bin_slots(len(bins[name]) + 1, size)[-1]
    bins[name].append(place_in_bin(get_item(obj.id), frame, size, depth, lateral))


def run_stow_task(order, scenes: SceneLibrary, config: RunConfig | None = None, seed: int = 0,
                  workcell: Workcell | None = None,
                  models: PerceptionModels | None = None) -> RunReport:
    """Stow tote items into the rack.

    Items that cannot be perceived (hidden or too occluded) are deferred to
    a later pass, since stowing whatever lies on top may reveal them. A pass that makes no
    progress marks everything still pending as perception_failed.
    """
    if order.mode != "stow":
        raise ValueError("run_stow_task needs a stow-mode work order")
    config, workcell, models = _setup(config, seed, workcell, models)
    models.prepare(order.targets)

    bins = {name: list(scenes.get(name, ())) for name in BIN_NAMES}
    tote = list(scenes.get(TOTE, ()))
    walls = workcell.tote.wall_boxes()
    pending = list(enumerate(order.targets))
    attempts: list[tuple[int, TaskAttempt]] = []
    pass_no = 0
    while pending:
        deferred = []
        for k, item in pending:
            t_start = time.perf_counter()
            dest = choose_destination(bins)
            d = bin_index(dest)
            att = _Attempt(item, TOTE, dest)
            attempt_seed = derive_seed(seed, "stow", item, k, pass_no)
            try:
                result, lifted = _execute(
                    att, workcell, config, models, tote, walls, workcell.home_to_toteview,
                    workcell.tote_view, workcell.bin_drop[d], workcell.bin_drop_to_home[d],
                    attempt_seed, t_start)
            except ItemNotFoundError as exc:
                deferred.append((k, item, str(exc)))
                continue
            if result.outcome == PERCEPTION_FAILED:
                deferred.append((k, item, result.detail))
                continue
            if lifted is not None:
                tote.remove(lifted)
                _stow_into(workcell, bins, dest, lifted)
            attempts.append((k, result))
        if len(deferred) == len(pending):
            for k, item, why in deferred:
                attempts.append((k, TaskAttempt(item, TOTE, "", PERCEPTION_FAILED, detail=why)))
            break
        pending = [(k, item) for k, item, _ in deferred]
        pass_no += 1
    return RunReport.from_attempts([a for _, a in attempts], config.score_table)
