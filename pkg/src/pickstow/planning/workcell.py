"""The simulated cell: robot with suction tool, rack, tote, the predefined
joint configurations and the four-segment pick/stow motion sequence.

Fixed configurations (home, one bin view per bin, tote drop and view) are
solved by IK against the configured rack when the workcell is built, and
the fixed paths between them are stored. Only the pre-grasp and post-grasp
segments are planned at run time.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..errors import InfeasibleGoalError, StartInCollisionError
from ..geometry import Box, make_transform, pose_from_json, transform_points
from ..ik import IKSettings, solve_ik_dls
from ..kinematics import DHRow, RobotModel, forward_kinematics, ur5_model
from ..rack import N_BINS, RackDims, RackModel, ideal_rack
from ..seeding import derive_seed
from .collision import CollisionWorld, in_collision, path_free
from .rrt import Plan, PlanRequest, plan_rrt, shortcut, straight_line_plan

TOOL_LENGTH = 0.12
# rack-facing, elbow-up posture; joint limits are centred on it
NOMINAL_Q = (2.877, -1.423, 1.943, -0.521, 1.307, -3.141)
LINK_RADII = (0.07, 0.06, 0.05, 0.045, 0.045, 0.015)
# rack frame axes in the world: x right = -y, y down = -z, z into the rack = +x
RACK_ROTATION = np.column_stack([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]])
RACK_ORIGIN = (0.75, 0.375, 0.55)
# tool pointing down over the tote, camera x along world +y
DOWN_ROTATION = np.column_stack([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]])


def default_rack_dims() -> RackDims:
    return RackDims(rack_pose=make_transform(RACK_ROTATION, RACK_ORIGIN))


def tool_robot(tool_length: float = TOOL_LENGTH, joint_limits=None,
               link_radii=LINK_RADII) -> RobotModel:
    """UR5 with a straight suction tool of ``tool_length`` on the flange."""
    rows = list(ur5_model().dh_rows)
    last = rows[-1]
    rows[-1] = DHRow(last.a, last.d + tool_length, last.alpha, last.theta_offset)
    if joint_limits is None:
        nominal = np.array(NOMINAL_Q)
        joint_limits = np.column_stack([nominal - np.pi, nominal + np.pi])
    return RobotModel(tuple(rows), joint_limits, link_radii)


@dataclass(frozen=True, eq=False)
class Tote:
    """Open box; ``pose`` is the frame at the centre of its floor, z up."""

    pose: np.ndarray = field(default_factory=lambda: make_transform(None, (0.25, 0.55, -0.30)))
    size: tuple[float, float, float] = (0.50, 0.35, 0.15)
    wall: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "pose", np.array(self.pose, dtype=float))
        object.__setattr__(self, "size", tuple(float(s) for s in self.size))

    def wall_boxes(self) -> list[Box]:
        L, W, H = self.size
        t = self.wall
        slabs = [
            ((-L / 2, -W / 2, -t), (L / 2, W / 2, 0.0)),
            ((-L / 2 - t, -W / 2, -t), (-L / 2, W / 2, H)),
            ((L / 2, -W / 2, -t), (L / 2 + t, W / 2, H)),
            ((-L / 2 - t, -W / 2 - t, -t), (L / 2 + t, -W / 2, H)),
            ((-L / 2 - t, W / 2, -t), (L / 2 + t, W / 2 + t, H)),
        ]
        boxes = []
        for lo, hi in slabs:
            w = transform_points(self.pose, np.array(list(itertools.product(*zip(lo, hi)))))
            boxes.append(Box(tuple(w.min(axis=0)), tuple(w.max(axis=0))))
        return boxes

    def to_dict(self) -> dict:
        return {"pose": self.pose.tolist(), "size_m": list(self.size), "wall_thickness_m": self.wall}

    @classmethod
    def from_dict(cls, doc: dict) -> "Tote":
        kw = {}
        if "pose" in doc:
            kw["pose"] = pose_from_json(doc["pose"])
        if "size_m" in doc:
            kw["size"] = tuple(doc["size_m"])
        if "wall_thickness_m" in doc:
            kw["wall"] = float(doc["wall_thickness_m"])
        return cls(**kw)


@dataclass(frozen=True)
class PlannerSettings:
    step_size: float = 0.1
    goal_bias: float = 0.1
    max_samples: int = 5000
    smoothing_attempts: int = 100
    standoff: float = 0.02
    voxel_size: float = 0.01
    exclusion_margin: float = 0.01

    @classmethod
    def from_dict(cls, doc: dict) -> "PlannerSettings":
        return cls(**doc)


@dataclass(frozen=True, eq=False)
class WorkcellConfig:
    rack_dims: RackDims = field(default_factory=default_rack_dims)
    tote: Tote = field(default_factory=Tote)
    model: RobotModel = field(default_factory=tool_robot)
    tool_length: float = TOOL_LENGTH
    nominal_q: tuple[float, ...] = NOMINAL_Q
    home_position: tuple[float, float, float] = (0.35, 0.0, 0.35)
    binview_standoff: float = 0.25   # camera to rack face
    bin_drop_depth: float = 0.05     # tool tip inside the bin face when stowing
    tote_drop_height: float = 0.35   # tool tip above the tote floor
    tote_view_height: float = 0.50   # camera above the tote floor
    planner: PlannerSettings = field(default_factory=PlannerSettings)
    ik: IKSettings = field(default_factory=lambda: IKSettings(max_iterations=300))


def wrap_to_limits(model: RobotModel, q) -> np.ndarray | None:
    """Equivalent configuration (per-joint 2*pi shifts) inside the joint
    limits, or None when some joint has no representative there."""
    q = np.asarray(q, dtype=float)
    w = model.lower + np.mod(q - model.lower, 2 * np.pi)
    return w if np.all(w <= model.upper) else None


def solve_config(model: RobotModel, pose: np.ndarray, seeds: Sequence, settings: IKSettings,
                 world: CollisionWorld | None = None) -> np.ndarray:
    """First IK solution (over ``seeds``) inside the limits and collision-free."""
    for seed in seeds:
        res = solve_ik_dls(model, pose, seed, settings)
        if not res.converged:
            continue
        q = wrap_to_limits(model, res.q)
        if q is None:
            continue
        if world is not None and in_collision(model, q, world):
            continue
        return q
    raise InfeasibleGoalError("no collision-free IK solution for the requested pose")


def grasp_pose(point, normal, reference_x, standoff: float) -> np.ndarray:
    """Tool pose ``standoff`` out along the surface normal, tool z = -normal.

    The tool roll keeps its x axis as close as possible to ``reference_x``.
    """
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    z = -n
    for ref in (np.asarray(reference_x, dtype=float), np.array([0.0, 0.0, 1.0]),
                np.array([1.0, 0.0, 0.0])):
        x = ref - ref.dot(z) * z
        if np.linalg.norm(x) > 1e-6:
            break
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return make_transform(np.column_stack([x, y, z]), np.asarray(point, dtype=float) + standoff * n)


@dataclass(frozen=True, eq=False)
class Workcell:
    config: WorkcellConfig
    model: RobotModel
    rack: RackModel
    hand_eye: np.ndarray          # tool tip -> camera
    home: np.ndarray
    binview: np.ndarray           # (12, 6)
    bin_drop: np.ndarray          # (12, 6)
    tote_drop: np.ndarray
    tote_view: np.ndarray
    home_to_binview: tuple[Plan, ...]
    bin_drop_to_home: tuple[Plan, ...]
    home_to_toteview: Plan
    tote_drop_to_home: Plan

    @property
    def tote(self) -> Tote:
        return self.config.tote

    @property
    def planner(self) -> PlannerSettings:
        return self.config.planner

    def camera_pose(self, q) -> np.ndarray:
        return forward_kinematics(self.model, q) @ self.hand_eye

    def static_world(self) -> CollisionWorld:
        return CollisionWorld(tuple(self.rack.wall_boxes) + tuple(self.tote.wall_boxes()))

    def ik_seeds(self, first=None) -> list[np.ndarray]:
        seeds = [] if first is None else [np.asarray(first, dtype=float)]
        return seeds + [self.home, np.array(self.config.nominal_q)]


def _connect(model, world, a, b, settings: PlannerSettings, seed: int, label: str) -> Plan:
    plan = straight_line_plan(model, world, a, b, settings.step_size, label)
    if plan.success:
        return plan
    req = PlanRequest(a, b, world, model, settings.step_size, settings.goal_bias,
                      settings.max_samples, seed, settings.smoothing_attempts, label)
    plan = plan_rrt(req)
    if not plan.success:
        raise InfeasibleGoalError(f"cannot connect fixed configurations for {label}")
    return plan


def build_workcell(config: WorkcellConfig = WorkcellConfig(), seed: int = 0) -> Workcell:
    model = config.model
    rack = ideal_rack(config.rack_dims)
    tote = config.tote
    world = CollisionWorld(tuple(rack.wall_boxes) + tuple(tote.wall_boxes()))
    ik = config.ik
    nominal = np.array(config.nominal_q, dtype=float)
    hand_eye = make_transform(None, (0.0, 0.0, -config.tool_length))
    R_rack = config.rack_dims.rack_pose[:3, :3]
    into = R_rack[:, 2]

    home = solve_config(model, make_transform(R_rack, config.home_position), [nominal], ik, world)
    tip_offset = config.binview_standoff - config.tool_length
    binview, bin_drop = [], []
    for b in range(N_BINS):
        c = rack.bin_centers_3d[b]
        binview.append(solve_config(model, make_transform(R_rack, c - tip_offset * into),
                                    [home, nominal], ik, world))
        bin_drop.append(solve_config(model, make_transform(R_rack, c + config.bin_drop_depth * into),
                                     [binview[-1], home, nominal], ik, world))
    floor = tote.pose[:3, 3]
    up = tote.pose[:3, 2]
    tote_drop = solve_config(model, make_transform(DOWN_ROTATION, floor + config.tote_drop_height * up),
                             [home, nominal], ik, world)
    view_tip = floor + (config.tote_view_height - config.tool_length) * up
    tote_view = solve_config(model, make_transform(DOWN_ROTATION, view_tip),
                             [tote_drop, home, nominal], ik, world)

    ps = config.planner
    to_bins = tuple(_connect(model, world, home, binview[b], ps, derive_seed(seed, "view", b),
                             "home_to_binview") for b in range(N_BINS))
    from_bins = tuple(_connect(model, world, bin_drop[b], home, ps, derive_seed(seed, "drop", b),
                               "tote_to_home") for b in range(N_BINS))
    to_tote = _connect(model, world, home, tote_view, ps, derive_seed(seed, "toteview"),
                       "home_to_binview")
    from_tote = _connect(model, world, tote_drop, home, ps, derive_seed(seed, "totedrop"),
                         "tote_to_home")
    return Workcell(config, model, rack, hand_eye, home, np.array(binview), np.array(bin_drop),
                    tote_drop, tote_view, to_bins, from_bins, to_tote, from_tote)


# -- motion sequence -----------------------------------------------------------


def _stored(plan: Plan, world: CollisionWorld, model: RobotModel, resolution: float) -> Plan:
    if path_free(model, world, plan.waypoints, resolution):
        return plan
    return replace(plan, success=False, error="stored path collides with the current world")


def _rrt_segment(workcell: Workcell, start, goal, world, seed, label) -> Plan:
    """Direct edge when it is free, RRT otherwise."""
    ps = workcell.planner
    direct = straight_line_plan(workcell.model, world, start, goal, ps.step_size, label)
    if direct.success:
        return direct
    req = PlanRequest(start, goal, world, workcell.model, ps.step_size, ps.goal_bias,
                      ps.max_samples, seed, ps.smoothing_attempts, label)
    try:
        return plan_rrt(req)
    except (InfeasibleGoalError, StartInCollisionError) as exc:
        return Plan(np.asarray(start, dtype=float)[None], label, 0, False, str(exc))


def approach_segment(workcell: Workcell, approach: Plan, world: CollisionWorld) -> Plan:
    """Segment 1: the stored path, re-validated against the current world."""
    return _stored(approach, world, workcell.model, workcell.planner.step_size / 4)


def grasp_segments(workcell: Workcell, view_q, target, drop_q, retreat: Plan,
                   world: CollisionWorld, seed: int = 0, timings: dict | None = None,
                   approach: Plan | None = None) -> list[Plan]:
    """Segments 2-4: planned pre-grasp, planned post-grasp, stored retreat.

    Stops at the first failure. ``timings`` (if given) receives the wall
    time of each attempted segment keyed by its label. ``approach`` (home to
    the viewing pose) lets the post-grasp fall back to a route via home.
    """
    model = workcell.model
    plans: list[Plan] = []
    clock = time.perf_counter

    t0 = clock()
    # keep the roll of the viewing pose so the wrist does not spin
    view_x = forward_kinematics(model, view_q)[:3, 0]
    pose = grasp_pose(target.point, target.normal, view_x, workcell.planner.standoff)
    try:
        grasp_q = solve_config(model, pose, workcell.ik_seeds(view_q), workcell.config.ik, world)
        plans.append(_rrt_segment(workcell, view_q, grasp_q, world,
                                  derive_seed(seed, "pre_grasp"), "pre_grasp"))
    except InfeasibleGoalError as exc:
        plans.append(Plan(np.asarray(view_q, dtype=float)[None], "pre_grasp", 0, False, str(exc)))
    _tick(timings, "pre_grasp", t0)
    if not plans[-1].success:
        return plans

    t0 = clock()
    via = (_reversed(approach), _reversed(retreat)) if approach is not None else ()
    plans.append(_post_grasp(workcell, plans[0], drop_q, world, derive_seed(seed, "post_grasp"),
                             via))
    _tick(timings, "post_grasp", t0)
    if not plans[-1].success:
        return plans

    t0 = clock()
    plans.append(_stored(retreat, world, model, workcell.planner.step_size / 4))
    _tick(timings, "tote_to_home", t0)
    return plans


def _post_grasp(workcell: Workcell, pre_grasp: Plan, drop_q, world, seed: int,
                via: Sequence[Plan] = ()) -> Plan:
    """Grasp -> drop.

    Tries the direct edge first, then backing out along the pre-grasp path
    and either going straight to the drop pose or following the stored
    ``via`` paths (viewing pose -> home -> drop), and finally a fresh RRT.
    """
    grasp_q, view_q = pre_grasp.waypoints[-1], pre_grasp.waypoints[0]
    model, ps = workcell.model, workcell.planner
    res = ps.step_size / 4
    direct = straight_line_plan(model, world, grasp_q, drop_q, ps.step_size, "post_grasp")
    if direct.success:
        return direct
    back = pre_grasp.waypoints[::-1]
    onward = straight_line_plan(model, world, view_q, drop_q, ps.step_size, "post_grasp")
    if onward.success:
        return Plan(np.vstack([back, onward.waypoints[1:]]), "post_grasp", 0, True)
    if via:
        path = np.vstack([back] + [p.waypoints[1:] for p in via])
        if np.allclose(path[-1], drop_q) and path_free(model, world, path, res):
            req = PlanRequest(grasp_q, drop_q, world, model, ps.step_size, ps.goal_bias,
                              ps.max_samples, seed, ps.smoothing_attempts, "post_grasp")
            path = shortcut(req, path, np.random.default_rng(seed))
            return Plan(path, "post_grasp", 0, True)
    return _rrt_segment(workcell, grasp_q, drop_q, world, seed, "post_grasp")


def _reversed(plan: Plan) -> Plan:
    return replace(plan, waypoints=plan.waypoints[::-1].copy())


def _tick(timings, key, t0) -> None:
    if timings is not None:
        timings[key] = time.perf_counter() - t0


def motion_sequence(workcell: Workcell, approach: Plan, target, drop_q, retreat: Plan,
                    world: CollisionWorld, seed: int = 0) -> list[Plan]:
    """The four segments: stored approach, planned pre-grasp, planned
    post-grasp, stored retreat. Stops at the first failed segment.

    ``target`` is a SuctionTarget; ``world`` should already exclude the
    target's own voxels so the tool may touch it.
    """
    first = approach_segment(workcell, approach, world)
    if not first.success:
        return [first]
    return [first] + grasp_segments(workcell, approach.waypoints[-1], target, drop_q, retreat,
                                    world, seed, approach=approach)


def pick_motion_sequence(workcell: Workcell, bin_index: int, target, world: CollisionWorld,
                         seed: int = 0) -> list[Plan]:
    """Bin view -> grasp -> tote drop -> home for one pick."""
    return motion_sequence(workcell, workcell.home_to_binview[bin_index], target,
                           workcell.tote_drop, workcell.tote_drop_to_home, world, seed)


def stow_motion_sequence(workcell: Workcell, dest_bin: int, target, world: CollisionWorld,
                         seed: int = 0) -> list[Plan]:
    """Tote view -> grasp -> bin drop -> home for one stow."""
    return motion_sequence(workcell, workcell.home_to_toteview, target,
                           workcell.bin_drop[dest_bin], workcell.bin_drop_to_home[dest_bin],
                           world, seed)
