"""Single-tree joint-space RRT with goal bias and shortcut smoothing."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ..errors import InfeasibleGoalError, StartInCollisionError
from ..ik import IKSettings, solve_ik_dls
from ..kinematics import RobotModel
from .collision import CollisionWorld, edge_free, in_collision

SegmentLabel = Literal["home_to_binview", "pre_grasp", "post_grasp", "tote_to_home", "free"]


@dataclass(frozen=True, eq=False)
class PlanRequest:
    start: np.ndarray
    goal: np.ndarray           # 6 joint angles, or a 4x4 pose resolved through IK
    world: CollisionWorld
    model: RobotModel
    step_size: float = 0.1
    goal_bias: float = 0.1
    max_samples: int = 5000
    seed: int = 0
    smoothing_attempts: int = 100
    label: SegmentLabel = "free"
    ik_settings: IKSettings = field(default_factory=IKSettings)

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if not 0.0 <= self.goal_bias <= 1.0:
            raise ValueError("goal_bias must be in [0, 1]")
        if self.max_samples < 1:
            raise ValueError("max_samples must be >= 1")
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float).reshape(6))
        object.__setattr__(self, "goal", np.asarray(self.goal, dtype=float))

    @property
    def resolution(self) -> float:
        return self.step_size / 4


@dataclass(frozen=True, eq=False)
class Plan:
    waypoints: np.ndarray  # (K, 6)
    segment_label: str
    samples_used: int
    success: bool
    error: str | None = None

    def __len__(self) -> int:
        return len(self.waypoints)

    def path_length(self) -> float:
        return path_length(self.waypoints)

    def csv_rows(self) -> list[list]:
        return [[self.segment_label, i, *map(float, q)] for i, q in enumerate(self.waypoints)]

    def to_csv(self) -> str:
        return plans_to_csv([self])


CSV_HEADER = ["segment", "waypoint", "q1", "q2", "q3", "q4", "q5", "q6"]


def plans_to_csv(plans) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for plan in plans:
        w.writerows(plan.csv_rows())
    return buf.getvalue()


def path_length(waypoints) -> float:
    w = np.atleast_2d(waypoints)
    return float(np.sum(np.linalg.norm(np.diff(w, axis=0), axis=1)))


def densify(a, b, step_size: float) -> np.ndarray:
    """Points after ``a`` up to and including ``b`` so that consecutive
    configurations are at most ``step_size`` apart."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = max(1, int(np.ceil(np.linalg.norm(b - a) / step_size - 1e-12)))
    t = np.arange(1, n + 1)[:, None] / n
    return a + t * (b - a)


def resolve_goal(request: PlanRequest) -> np.ndarray:
    if request.goal.shape == (6,):
        return request.goal
    if request.goal.shape != (4, 4):
        raise ValueError("goal must be 6 joint angles or a 4x4 pose")
    res = solve_ik_dls(request.model, request.goal, request.start, request.ik_settings)
    if not res.converged:
        raise InfeasibleGoalError(
            f"goal pose unreachable (IK residual {res.final_position_error:.4f} m)")
    return res.q


def _segment_free(request: PlanRequest, a, b) -> bool:
    return edge_free(request.model, request.world, a, b, request.resolution)


def shortcut(request: PlanRequest, path: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random pairwise shortcutting. A candidate straight segment is densified
    to ``step_size`` first and accepted only if every densified edge is free,
    so the result never gains length and stays valid."""
    path = np.asarray(path)
    for _ in range(request.smoothing_attempts):
        if len(path) <= 2:
            break
        i, j = sorted(rng.choice(len(path), 2, replace=False))
        if j - i < 2:
            continue
        new = densify(path[i], path[j], request.step_size)
        if len(new) >= j - i:
            continue
        pts = np.vstack([path[i:i + 1], new])
        if all(_segment_free(request, p, q) for p, q in zip(pts[:-1], pts[1:])):
            path = np.vstack([path[:i + 1], new, path[j + 1:]])
    return path


def plan_rrt(request: PlanRequest) -> Plan:
    model, world = request.model, request.world
    start = request.start
    if in_collision(model, start, world):
        raise StartInCollisionError("start configuration is in collision")
    goal = resolve_goal(request)
    if in_collision(model, goal, world):
        raise InfeasibleGoalError("goal configuration is in collision")
    label = request.label
    if np.array_equal(start, goal):
        return Plan(start[None].copy(), label, 0, True)

    rng = np.random.default_rng(request.seed)
    lower, upper = model.lower, model.upper
    cap = request.max_samples + 2
    nodes = np.empty((cap, 6))
    parent = np.full(cap, -1, dtype=int)
    nodes[0] = start
    count = 1
    step = request.step_size

    goal_node = -1
    samples = 0
    while samples < request.max_samples:
        samples += 1
        target = goal if rng.random() < request.goal_bias else rng.uniform(lower, upper)
        d2 = np.sum((nodes[:count] - target) ** 2, axis=1)
        near = int(np.argmin(d2))
        dist = np.sqrt(d2[near])
        if dist == 0.0:
            continue
        new = target if dist <= step else nodes[near] + (target - nodes[near]) * (step / dist)
        if not (np.all(new >= lower) and np.all(new <= upper)):
            continue
        if not _segment_free(request, nodes[near], new):
            continue
        nodes[count], parent[count] = new, near
        count += 1
        gap = np.linalg.norm(goal - new)
        if gap == 0.0:
            goal_node = count - 1
            break
        if gap <= step and _segment_free(request, new, goal):
            nodes[count], parent[count] = goal, count - 1
            count += 1
            goal_node = count - 1
            break

    if goal_node < 0:
        return Plan(start[None].copy(), label, samples, False,
                    f"no path found within {request.max_samples} samples")
    chain = []
    k = goal_node
    while k >= 0:
        chain.append(nodes[k])
        k = parent[k]
    path = np.array(chain[::-1])
    path = shortcut(request, path, rng)
    return Plan(path, label, samples, True)


def straight_line_plan(model: RobotModel, world: CollisionWorld, start, goal,
                       step_size: float = 0.1, label: SegmentLabel = "free") -> Plan:
    """Joint-space straight line densified to ``step_size``, collision-checked."""
    start = np.asarray(start, dtype=float)
    waypoints = np.vstack([start[None], densify(start, goal, step_size)]) \
        if not np.array_equal(start, goal) else start[None].copy()
    res = step_size / 4
    ok = not in_collision(model, start, world) and all(
        edge_free(model, world, a, b, res) for a, b in zip(waypoints[:-1], waypoints[1:]))
    return Plan(waypoints, label, 0, ok, None if ok else "straight-line path collides")
