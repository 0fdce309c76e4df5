"""Capsule robot against axis-aligned boxes and occupied voxels.

Each link is the segment between consecutive frame origins, swept by the
model's link radius. Segment-to-box distances are exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..geometry import Box, boxes_to_arrays, segment_box_distance
from ..kinematics import RobotModel, frame_origins
from .voxels import VoxelGrid


@dataclass(frozen=True, eq=False)
class CollisionWorld:
    boxes: tuple[Box, ...] = ()
    voxels: VoxelGrid = field(default_factory=VoxelGrid)

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        lo_b, hi_b = boxes_to_arrays(self.boxes)
        lo_v, hi_v = self.voxels.box_arrays()
        lo = np.vstack([lo_b, lo_v])
        hi = np.vstack([hi_b, hi_v])
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "_lo", lo)
        object.__setattr__(self, "_hi", hi)

    @property
    def obstacle_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(lo, hi) of every obstacle: boxes first, then voxels."""
        return self._lo, self._hi

    def with_voxels(self, voxels: VoxelGrid) -> "CollisionWorld":
        return CollisionWorld(self.boxes, voxels)

    def with_boxes(self, extra: Sequence[Box]) -> "CollisionWorld":
        return CollisionWorld(self.boxes + tuple(extra), self.voxels)

    def to_dict(self) -> dict:
        return {"boxes": [b.to_json() for b in self.boxes], "voxels": self.voxels.to_dict()}

    @classmethod
    def from_dict(cls, doc: dict) -> "CollisionWorld":
        voxels = VoxelGrid.from_dict(doc["voxels"]) if "voxels" in doc else VoxelGrid()
        return cls(tuple(Box.from_json(b) for b in doc.get("boxes", ())), voxels)


def link_segments(model: RobotModel, q) -> tuple[np.ndarray, np.ndarray]:
    """Start and end points of the 6 link capsules, each (6, 3)."""
    p = frame_origins(model, q)
    return p[:-1], p[1:]


def link_clearances(model: RobotModel, q, world: CollisionWorld) -> np.ndarray:
    """Per-link signed clearance (distance to nearest obstacle minus radius).

    Obstacles whose box is farther than the radius from the segment's
    bounding box are skipped; their clearance would be positive anyway,
    so links with no nearby obstacle report +inf.
    """
    lo, hi = world.obstacle_arrays
    starts, ends = link_segments(model, q)
    out = np.full(len(starts), np.inf)
    if len(lo) == 0:
        return out
    for k, (a, b) in enumerate(zip(starts, ends)):
        r = model.link_radii[k]
        seg_lo = np.minimum(a, b) - r
        seg_hi = np.maximum(a, b) + r
        near = np.all((lo <= seg_hi) & (hi >= seg_lo), axis=1)
        if near.any():
            out[k] = segment_box_distance(a, b, lo[near], hi[near]).min() - r
    return out


def in_collision(model: RobotModel, q, world: CollisionWorld) -> bool:
    lo, hi = world.obstacle_arrays
    if len(lo) == 0:
        return False
    starts, ends = link_segments(model, q)
    for k, (a, b) in enumerate(zip(starts, ends)):
        r = model.link_radii[k]
        seg_lo = np.minimum(a, b) - r
        seg_hi = np.maximum(a, b) + r
        near = np.all((lo <= seg_hi) & (hi >= seg_lo), axis=1)
        if near.any() and segment_box_distance(a, b, lo[near], hi[near]).min() < r:
            return True
    return False


def edge_configs(a, b, resolution: float) -> np.ndarray:
    """Configurations checked along the straight joint-space edge a->b,
    excluding a itself: ceil(|b - a| / resolution) evenly spaced points."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = max(1, int(np.ceil(np.linalg.norm(b - a) / resolution)))
    t = np.arange(1, n + 1)[:, None] / n
    return a + t * (b - a)


def edge_free(model: RobotModel, world: CollisionWorld, a, b, resolution: float) -> bool:
    return not any(in_collision(model, q, world) for q in edge_configs(a, b, resolution))


def path_free(model: RobotModel, world: CollisionWorld, waypoints, resolution: float) -> bool:
    """Every waypoint and every sub-resolution edge interpolant is free."""
    waypoints = np.atleast_2d(waypoints)
    if in_collision(model, waypoints[0], world):
        return False
    return all(edge_free(model, world, a, b, resolution)
               for a, b in zip(waypoints[:-1], waypoints[1:]))
