"""Simulated suction check standing in for the gripper's pick sensor."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..perception.scene import SceneObject, surface_query

SUCCEEDED, WRONG_ITEM, DROPPED = "succeeded", "wrong_item", "dropped"
PLAN_FAILED, PERCEPTION_FAILED = "plan_failed", "perception_failed"
OUTCOMES = (SUCCEEDED, WRONG_ITEM, DROPPED, PLAN_FAILED, PERCEPTION_FAILED)


@dataclass(frozen=True)
class SuctionThresholds:
    max_distance: float = 0.005
    max_angle_deg: float = 15.0
    cup_radius: float = 0.015

    @classmethod
    def from_dict(cls, doc: dict) -> "SuctionThresholds":
        return cls(**doc)


def simulate_suction(target, obj: SceneObject, thresholds: SuctionThresholds = SuctionThresholds(),
                     scene: Sequence[SceneObject] = ()) -> str:
    """Outcome of pressing the cup onto ``target`` when ``obj`` is wanted.

    The contact is attributed to the object whose surface is nearest the
    suction point. If that is another object within the distance threshold
    the result is ``wrong_item``. Otherwise the seal holds when the point
    is on ``obj``'s surface, the normals agree and no edge or rim lies
    within the cup radius.
    """
    point = np.asarray(target.point, dtype=float)
    q = surface_query(obj, point)
    dist = float(q.distance[0])
    for other in scene:
        if other is obj:
            continue
        d_other = float(surface_query(other, point).distance[0])
        if d_other < dist and d_other <= thresholds.max_distance:
            return WRONG_ITEM
    if dist > thresholds.max_distance:
        return DROPPED
    cos = float(np.clip(np.dot(target.normal, q.normal[0]), -1.0, 1.0))
    if np.degrees(np.arccos(cos)) > thresholds.max_angle_deg:
        return DROPPED
    if q.edge_distance[0] < thresholds.cup_radius:
        return DROPPED
    return SUCCEEDED
